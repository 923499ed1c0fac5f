use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::dataset::{LabeledDataset, Sample};
use crate::linalg::Dense;

/// N×D matrix of latent vectors, one row per sample.
///
/// Immutable once built: constructors check that every entry is finite and
/// that sample ids are unique and aligned with the rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingMatrix {
    sample_ids: Vec<String>,
    labels: Option<Vec<String>>,
    values: Dense,
}

impl EmbeddingMatrix {
    pub fn new(sample_ids: Vec<String>, values: Dense) -> Result<Self> {
        Self::with_labels(sample_ids, None, values)
    }

    pub fn with_labels(
        sample_ids: Vec<String>,
        labels: Option<Vec<String>>,
        values: Dense,
    ) -> Result<Self> {
        if sample_ids.len() != values.rows() {
            return Err(Error::RowCountMismatch {
                expected: values.rows(),
                found: sample_ids.len(),
            });
        }
        if let Some(l) = &labels {
            if l.len() != sample_ids.len() {
                return Err(Error::RowCountMismatch {
                    expected: sample_ids.len(),
                    found: l.len(),
                });
            }
        }
        let mut seen = HashSet::with_capacity(sample_ids.len());
        for (i, id) in sample_ids.iter().enumerate() {
            if id.is_empty() {
                return Err(Error::Malformed {
                    row: i + 1,
                    message: "empty sample id".into(),
                });
            }
            if !seen.insert(id.as_str()) {
                return Err(Error::DuplicateId {
                    row: i + 1,
                    id: id.clone(),
                });
            }
        }
        if let Some((r, c)) = values.first_non_finite() {
            return Err(Error::NonFinite { row: r + 1, col: c });
        }
        Ok(EmbeddingMatrix {
            sample_ids,
            labels,
            values,
        })
    }

    /// Builds a matrix with generated ids `s0, s1, ...`; handy for synthetic data.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let values = Dense::from_rows(rows)?;
        let ids = (0..values.rows()).map(|i| format!("s{i}")).collect();
        Self::new(ids, values)
    }

    pub fn n_rows(&self) -> usize {
        self.values.rows()
    }

    pub fn n_dims(&self) -> usize {
        self.values.cols()
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn values(&self) -> &Dense {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.values.row(i)
    }

    /// Replaces the values, keeping ids and labels (e.g. after standardization).
    pub fn map_values(&self, values: Dense) -> Result<Self> {
        Self::with_labels(self.sample_ids.clone(), self.labels.clone(), values)
    }

    pub fn select_rows(&self, idx: &[usize]) -> EmbeddingMatrix {
        EmbeddingMatrix {
            sample_ids: idx.iter().map(|&i| self.sample_ids[i].clone()).collect(),
            labels: self
                .labels
                .as_ref()
                .map(|l| idx.iter().map(|&i| l[i].clone()).collect()),
            values: self.values.select_rows(idx),
        }
    }

    /// Row-wise concatenation; ids must stay unique.
    pub fn vstack(&self, other: &EmbeddingMatrix) -> Result<EmbeddingMatrix> {
        let values = self.values.vstack(&other.values)?;
        let mut ids = self.sample_ids.clone();
        ids.extend(other.sample_ids.iter().cloned());
        let labels = match (&self.labels, &other.labels) {
            (Some(a), Some(b)) => Some(a.iter().chain(b).cloned().collect()),
            _ => None,
        };
        Self::with_labels(ids, labels, values)
    }

    /// Dataset view built from the ids and labels carried in this matrix.
    pub fn to_dataset(&self) -> Result<LabeledDataset> {
        let samples = self
            .sample_ids
            .iter()
            .enumerate()
            .map(|(i, id)| Sample {
                id: id.clone(),
                label: self
                    .labels
                    .as_ref()
                    .map(|l| l[i].clone())
                    .unwrap_or_default(),
                text: None,
            })
            .collect();
        LabeledDataset::new(samples)
    }

    /// Checks that `dataset` lists exactly these samples in the same order.
    pub fn check_aligned(&self, dataset: &LabeledDataset) -> Result<()> {
        if dataset.len() != self.n_rows() {
            return Err(Error::RowCountMismatch {
                expected: self.n_rows(),
                found: dataset.len(),
            });
        }
        for (i, (a, s)) in self.sample_ids.iter().zip(dataset.samples()).enumerate() {
            if *a != s.id {
                return Err(Error::Malformed {
                    row: i + 1,
                    message: format!("sample id {:?} does not match dataset id {:?}", a, s.id),
                });
            }
        }
        Ok(())
    }
}
