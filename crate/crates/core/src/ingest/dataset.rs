use std::collections::{BTreeSet, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    pub id: String,
    #[serde(default)]
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
}

/// Observed samples with their metadata labels and optional raw text.
///
/// `class_names` is the sorted set of distinct labels; class indices used by
/// the discriminant and featurize modules refer to positions in this list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledDataset {
    samples: Vec<Sample>,
    class_names: Vec<String>,
}

impl LabeledDataset {
    pub fn new(samples: Vec<Sample>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(samples.len());
        for (i, s) in samples.iter().enumerate() {
            if s.id.is_empty() {
                return Err(Error::Malformed {
                    row: i + 1,
                    message: "empty sample id".into(),
                });
            }
            if !seen.insert(s.id.as_str()) {
                return Err(Error::DuplicateId {
                    row: i + 1,
                    id: s.id.clone(),
                });
            }
        }
        let class_names = samples
            .iter()
            .map(|s| s.label.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        Ok(LabeledDataset {
            samples,
            class_names,
        })
    }

    /// Convenience constructor from parallel id/label lists.
    pub fn from_ids_labels<S: AsRef<str>>(ids: &[S], labels: &[S]) -> Result<Self> {
        if ids.len() != labels.len() {
            return Err(Error::RowCountMismatch {
                expected: ids.len(),
                found: labels.len(),
            });
        }
        Self::new(
            ids.iter()
                .zip(labels)
                .map(|(i, l)| Sample {
                    id: i.as_ref().to_string(),
                    label: l.as_ref().to_string(),
                    text: None,
                })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn ids(&self) -> Vec<&str> {
        self.samples.iter().map(|s| s.id.as_str()).collect()
    }

    pub fn labels(&self) -> Vec<&str> {
        self.samples.iter().map(|s| s.label.as_str()).collect()
    }

    /// Texts, with missing text treated as empty.
    pub fn texts(&self) -> Vec<&str> {
        self.samples
            .iter()
            .map(|s| s.text.as_deref().unwrap_or(""))
            .collect()
    }

    pub fn class_index(&self, label: &str) -> Option<usize> {
        self.class_names.iter().position(|c| c == label)
    }

    /// Class index of every sample.
    pub fn class_indices(&self) -> Vec<usize> {
        self.samples
            .iter()
            .map(|s| self.class_index(&s.label).expect("label in class set"))
            .collect()
    }

    /// Subset in the given index order. Class names are kept from `self` so
    /// indices stay comparable across train/test partitions.
    pub fn subset(&self, idx: &[usize]) -> LabeledDataset {
        LabeledDataset {
            samples: idx.iter().map(|&i| self.samples[i].clone()).collect(),
            class_names: self.class_names.clone(),
        }
    }

    /// Reorders this dataset to follow `ids`. Every id must be present.
    pub fn align_to(&self, ids: &[String]) -> Result<LabeledDataset> {
        if ids.len() != self.samples.len() {
            return Err(Error::RowCountMismatch {
                expected: ids.len(),
                found: self.samples.len(),
            });
        }
        let index: std::collections::HashMap<&str, usize> = self
            .samples
            .iter()
            .enumerate()
            .map(|(i, s)| (s.id.as_str(), i))
            .collect();
        let mut order = Vec::with_capacity(ids.len());
        for (row, id) in ids.iter().enumerate() {
            match index.get(id.as_str()) {
                Some(&i) => order.push(i),
                None => {
                    return Err(Error::Malformed {
                        row: row + 1,
                        message: format!("sample id {id:?} not found in dataset"),
                    })
                }
            }
        }
        Ok(self.subset(&order))
    }

    /// Reads `{"id", "label", "text"?}` records, one per line.
    pub fn load_jsonl(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut samples = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let s: Sample = serde_json::from_str(&line).map_err(|e| Error::Malformed {
                row: i + 1,
                message: e.to_string(),
            })?;
            samples.push(s);
        }
        Self::new(samples)
    }

    pub fn save_jsonl(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        for s in &self.samples {
            serde_json::to_writer(&mut w, s)?;
            w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}
