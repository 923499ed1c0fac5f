//! On-disk embedding formats: jsonl, csv and the packed little-endian binary.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::matrix::EmbeddingMatrix;
use crate::linalg::Dense;

const MAGIC: &[u8; 4] = b"EMBX";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingFormat {
    Jsonl,
    Csv,
    PackedBinary,
}

impl EmbeddingFormat {
    /// Guesses the format from the file extension (`.jsonl`, `.csv`, `.embx`/`.bin`).
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "jsonl" | "ndjson" => Some(Self::Jsonl),
            "csv" => Some(Self::Csv),
            "embx" | "bin" => Some(Self::PackedBinary),
            _ => None,
        }
    }
}

impl std::str::FromStr for EmbeddingFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jsonl" => Ok(Self::Jsonl),
            "csv" => Ok(Self::Csv),
            "packed_binary" | "binary" | "embx" => Ok(Self::PackedBinary),
            other => Err(Error::invalid(format!("unknown embedding format {other:?}"))),
        }
    }
}

/// Sidecar for packed binary files: ids and labels aligned with rows.
#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    ids: Vec<String>,
    labels: Vec<String>,
}

/// Path of the JSON manifest accompanying a packed binary file.
pub fn manifest_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

/// Rounds to nine significant digits, the precision of the text formats.
fn text_value(x: f64) -> f64 {
    format!("{x:.8e}").parse().expect("formatted float parses")
}

#[derive(Deserialize)]
struct JsonRecord {
    id: String,
    #[serde(default)]
    label: String,
    vector: Vec<f64>,
}

#[derive(Serialize)]
struct JsonRecordOut<'a> {
    id: &'a str,
    label: &'a str,
    vector: Vec<f64>,
}

/// Loads an embedding matrix. Row order equals file order.
pub fn load_embeddings(path: impl AsRef<Path>, format: EmbeddingFormat) -> Result<EmbeddingMatrix> {
    let path = path.as_ref();
    let (ids, labels, rows, dims, values) = match format {
        EmbeddingFormat::Jsonl => read_jsonl(path)?,
        EmbeddingFormat::Csv => read_csv(path)?,
        EmbeddingFormat::PackedBinary => read_binary(path)?,
    };
    let labels = labels.iter().any(|l| !l.is_empty()).then_some(labels);
    EmbeddingMatrix::with_labels(ids, labels, Dense::from_row_major(rows, dims, values)?)
}

/// Writes an embedding matrix. Packed binary stores float32, so values that are
/// exactly representable in f32 round-trip bit for bit; text formats keep nine
/// significant digits.
pub fn save_embeddings(
    m: &EmbeddingMatrix,
    path: impl AsRef<Path>,
    format: EmbeddingFormat,
) -> Result<()> {
    let path = path.as_ref();
    match format {
        EmbeddingFormat::Jsonl => write_jsonl(m, path),
        EmbeddingFormat::Csv => write_csv(m, path),
        EmbeddingFormat::PackedBinary => write_binary(m, path),
    }
}

type Parsed = (Vec<String>, Vec<String>, usize, usize, Vec<f64>);

fn push_row(
    row: usize,
    vector: &[f64],
    dims: &mut Option<usize>,
    values: &mut Vec<f64>,
) -> Result<()> {
    let d = *dims.get_or_insert(vector.len());
    if vector.len() != d {
        return Err(Error::DimensionMismatch {
            row,
            expected: d,
            found: vector.len(),
        });
    }
    if let Some(col) = vector.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite { row, col });
    }
    values.extend_from_slice(vector);
    Ok(())
}

fn check_id(row: usize, id: &str, seen: &mut std::collections::HashSet<String>) -> Result<()> {
    if id.is_empty() {
        return Err(Error::Malformed {
            row,
            message: "empty sample id".into(),
        });
    }
    if !seen.insert(id.to_string()) {
        return Err(Error::DuplicateId {
            row,
            id: id.to_string(),
        });
    }
    Ok(())
}

fn read_jsonl(path: &Path) -> Result<Parsed> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let (mut ids, mut labels, mut values) = (Vec::new(), Vec::new(), Vec::new());
    let mut dims = None;
    let mut seen = std::collections::HashSet::new();
    let mut row = 0;
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        row += 1;
        let rec: JsonRecord = serde_json::from_str(&line).map_err(|e| Error::Malformed {
            row,
            message: e.to_string(),
        })?;
        check_id(row, &rec.id, &mut seen)?;
        push_row(row, &rec.vector, &mut dims, &mut values)?;
        ids.push(rec.id);
        labels.push(rec.label);
    }
    Ok((ids, labels, row, dims.unwrap_or(0), values))
}

fn write_jsonl(m: &EmbeddingMatrix, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for i in 0..m.n_rows() {
        let rec = JsonRecordOut {
            id: &m.sample_ids()[i],
            label: m.labels().map_or("", |l| l[i].as_str()),
            vector: m.row(i).iter().map(|&x| text_value(x)).collect(),
        };
        serde_json::to_writer(&mut w, &rec)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn read_csv(path: &Path) -> Result<Parsed> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let header = reader
        .headers()
        .map_err(|e| Error::Malformed {
            row: 0,
            message: e.to_string(),
        })?
        .clone();
    if header.len() < 2 || &header[0] != "id" || &header[1] != "label" {
        return Err(Error::Malformed {
            row: 0,
            message: "csv header must start with `id,label`".into(),
        });
    }
    let (mut ids, mut labels, mut values) = (Vec::new(), Vec::new(), Vec::new());
    let mut dims = None;
    let mut seen = std::collections::HashSet::new();
    let mut row = 0;
    let mut vector = Vec::new();
    for record in reader.records() {
        row += 1;
        let record = record.map_err(|e| match e.kind() {
            csv::ErrorKind::UnequalLengths { len, .. } => Error::DimensionMismatch {
                row,
                expected: header.len() - 2,
                found: (*len as usize).saturating_sub(2),
            },
            _ => Error::Malformed {
                row,
                message: e.to_string(),
            },
        })?;
        check_id(row, &record[0], &mut seen)?;
        vector.clear();
        for field in record.iter().skip(2) {
            let x: f64 = field.trim().parse().map_err(|_| Error::Malformed {
                row,
                message: format!("cannot parse {field:?} as a number"),
            })?;
            vector.push(x);
        }
        push_row(row, &vector, &mut dims, &mut values)?;
        ids.push(record[0].to_string());
        labels.push(record[1].to_string());
    }
    Ok((ids, labels, row, dims.unwrap_or(header.len() - 2), values))
}

fn write_csv(m: &EmbeddingMatrix, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    let csv_err = |e: csv::Error| Error::io(path, std::io::Error::other(e));
    let mut header = vec!["id".to_string(), "label".to_string()];
    header.extend((0..m.n_dims()).map(|j| format!("v{j}")));
    w.write_record(&header).map_err(csv_err)?;
    for i in 0..m.n_rows() {
        let mut rec = vec![
            m.sample_ids()[i].clone(),
            m.labels().map_or(String::new(), |l| l[i].clone()),
        ];
        rec.extend(m.row(i).iter().map(|&x| text_value(x).to_string()));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn read_u32(buf: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(buf[at..at + 4].try_into().expect("4 bytes"))
}

fn read_binary(path: &Path) -> Result<Parsed> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    if bytes.len() < 16 || &bytes[..4] != MAGIC {
        return Err(Error::Malformed {
            row: 0,
            message: "missing EMBX header".into(),
        });
    }
    let version = read_u32(&bytes, 4);
    if version != VERSION {
        return Err(Error::Malformed {
            row: 0,
            message: format!("unsupported EMBX version {version}"),
        });
    }
    let n = read_u32(&bytes, 8) as usize;
    let d = read_u32(&bytes, 12) as usize;
    let expected = 16 + n * d * 4;
    if bytes.len() != expected {
        return Err(Error::Malformed {
            row: 0,
            message: format!(
                "payload holds {} bytes, header promises {}",
                bytes.len(),
                expected
            ),
        });
    }
    let mut values = Vec::with_capacity(n * d);
    for (k, chunk) in bytes[16..].chunks_exact(4).enumerate() {
        let x = f32::from_le_bytes(chunk.try_into().expect("4 bytes"));
        if !x.is_finite() {
            return Err(Error::NonFinite {
                row: k / d.max(1) + 1,
                col: k % d.max(1),
            });
        }
        values.push(f64::from(x));
    }

    let mpath = manifest_path(path);
    let text = std::fs::read_to_string(&mpath).map_err(|e| Error::io(&mpath, e))?;
    let manifest: Manifest = serde_json::from_str(&text)?;
    if manifest.ids.len() != n || manifest.labels.len() != n {
        return Err(Error::RowCountMismatch {
            expected: n,
            found: manifest.ids.len(),
        });
    }
    let mut seen = std::collections::HashSet::new();
    for (i, id) in manifest.ids.iter().enumerate() {
        check_id(i + 1, id, &mut seen)?;
    }
    Ok((manifest.ids, manifest.labels, n, d, values))
}

fn write_binary(m: &EmbeddingMatrix, path: &Path) -> Result<()> {
    let to_u32 = |x: usize, what: &str| {
        u32::try_from(x).map_err(|_| Error::invalid(format!("{what} {x} exceeds u32")))
    };
    let mut buf = Vec::with_capacity(16 + m.n_rows() * m.n_dims() * 4);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&to_u32(m.n_rows(), "row count")?.to_le_bytes());
    buf.extend_from_slice(&to_u32(m.n_dims(), "dimension")?.to_le_bytes());
    for &x in m.values().as_slice() {
        buf.extend_from_slice(&(x as f32).to_le_bytes());
    }
    std::fs::write(path, &buf).map_err(|e| Error::io(path, e))?;

    let manifest = Manifest {
        ids: m.sample_ids().to_vec(),
        labels: m
            .labels()
            .map_or_else(|| vec![String::new(); m.n_rows()], <[String]>::to_vec),
    };
    let mpath = manifest_path(path);
    std::fs::write(&mpath, serde_json::to_vec(&manifest)?).map_err(|e| Error::io(&mpath, e))
}
