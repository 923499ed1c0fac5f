use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::EmbeddingMatrix;
use crate::linalg::Dense;

/// Per-dimension centering and scaling with population standard deviations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    pub constant_dims: Vec<usize>,
}

pub fn fit_scaler(m: &EmbeddingMatrix) -> Result<Scaler> {
    let n = m.n_rows();
    if n < 2 {
        return Err(Error::InsufficientRows {
            what: "scaler fit".into(),
            needed: 2,
            available: n,
        });
    }
    let values = m.values();
    let means = values.column_means();
    let mut var = vec![0.0; m.n_dims()];
    for r in values.iter_rows() {
        for ((v, &x), &mu) in var.iter_mut().zip(r).zip(&means) {
            *v += (x - mu) * (x - mu);
        }
    }
    let stds: Vec<f64> = var.iter().map(|v| (v / n as f64).sqrt()).collect();
    let constant_dims = stds
        .iter()
        .enumerate()
        .filter(|(_, &s)| s == 0.0)
        .map(|(j, _)| j)
        .collect();
    Ok(Scaler {
        means,
        stds,
        constant_dims,
    })
}

impl Scaler {
    pub fn dims(&self) -> usize {
        self.means.len()
    }

    /// `(x - mean) / std` per dimension; constant dimensions map to 0.
    pub fn transform(&self, m: &EmbeddingMatrix) -> Result<EmbeddingMatrix> {
        if m.n_dims() != self.dims() {
            return Err(Error::DimensionMismatch {
                row: 1,
                expected: self.dims(),
                found: m.n_dims(),
            });
        }
        let mut out = Dense::zeros(m.n_rows(), m.n_dims());
        for i in 0..m.n_rows() {
            let dst = out.row_mut(i);
            for (j, (&x, d)) in m.row(i).iter().zip(dst.iter_mut()).enumerate() {
                let s = self.stds[j];
                *d = if s == 0.0 { 0.0 } else { (x - self.means[j]) / s };
            }
        }
        m.map_values(out)
    }
}

/// Free-function form of [`Scaler::transform`].
pub fn transform(s: &Scaler, m: &EmbeddingMatrix) -> Result<EmbeddingMatrix> {
    s.transform(m)
}
