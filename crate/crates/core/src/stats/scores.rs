use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Dense;

/// Projected scores (PC or LD coordinates), one row per sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreMatrix {
    pub sample_ids: Vec<String>,
    pub labels: Option<Vec<String>>,
    pub column_names: Vec<String>,
    pub values: Dense,
}

impl ScoreMatrix {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.column_names.iter().position(|c| c == name)?;
        Some(self.values.column(j))
    }

    /// `id,label,<columns...>` with nine significant digits.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("id,label");
        for c in &self.column_names {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for (i, id) in self.sample_ids.iter().enumerate() {
            out.push_str(&csv_field(id));
            out.push(',');
            if let Some(l) = &self.labels {
                out.push_str(&csv_field(&l[i]));
            }
            for &x in self.values.row(i) {
                out.push(',');
                out.push_str(&fmt_sig9(x));
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(self.to_csv_string().as_bytes())
            .map_err(|e| Error::io(path, e))
    }
}

/// Shortest decimal that round-trips the value rounded to nine significant digits.
pub fn fmt_sig9(x: f64) -> String {
    let r: f64 = format!("{x:.8e}").parse().expect("formatted float parses");
    if r == 0.0 {
        "0".into()
    } else {
        r.to_string()
    }
}

pub(crate) fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
