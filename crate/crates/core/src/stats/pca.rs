//! Principal component analysis via the SVD of the centered data matrix.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::EmbeddingMatrix;
use crate::linalg::{canonical_sign, dot, Dense};
use crate::stats::scores::ScoreMatrix;

/// Fitted principal axes. `components` rows are unit loadings ordered by
/// decreasing explained variance; each is sign-normalized so its
/// largest-magnitude entry is positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub components: Dense,
    pub explained_variance: Vec<f64>,
    pub explained_variance_ratio: Vec<f64>,
    pub singular_values: Vec<f64>,
    pub mean: Vec<f64>,
    pub total_variance: f64,
    pub n_fitted: usize,
}

/// Largest admissible component count for an N×D matrix.
pub fn max_components(n_rows: usize, n_dims: usize) -> usize {
    n_rows.saturating_sub(1).min(n_dims)
}

pub fn fit_pca(m: &EmbeddingMatrix, k: usize) -> Result<PcaModel> {
    let (n, d) = (m.n_rows(), m.n_dims());
    if n < 2 {
        return Err(Error::InsufficientRows {
            what: "PCA fit".into(),
            needed: 2,
            available: n,
        });
    }
    let kmax = max_components(n, d);
    if k == 0 || k > kmax {
        return Err(Error::invalid(format!(
            "requested {k} components; must be between 1 and min(N-1, D) = {kmax}"
        )));
    }
    if let Some((r, c)) = m.values().first_non_finite() {
        return Err(Error::NonFinite { row: r + 1, col: c });
    }

    let mean = m.values().column_means();
    let mut centered = m.values().to_nalgebra();
    for j in 0..d {
        let mu = mean[j];
        centered.column_mut(j).iter_mut().for_each(|x| *x -= mu);
    }
    let svd = centered.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let s = svd.singular_values;

    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]).then(a.cmp(&b)));

    let denom = (n - 1) as f64;
    let total_variance: f64 = s.iter().map(|x| x * x / denom).sum();
    let mut components = Dense::zeros(k, d);
    let mut explained_variance = Vec::with_capacity(k);
    let mut singular_values = Vec::with_capacity(k);
    for (row, &idx) in order.iter().take(k).enumerate() {
        let mut v: Vec<f64> = v_t.row(idx).iter().copied().collect();
        canonical_sign(&mut v);
        components.row_mut(row).copy_from_slice(&v);
        singular_values.push(s[idx]);
        explained_variance.push(s[idx] * s[idx] / denom);
    }
    let explained_variance_ratio = explained_variance
        .iter()
        .map(|v| if total_variance > 0.0 { v / total_variance } else { 0.0 })
        .collect();
    Ok(PcaModel {
        components,
        explained_variance,
        explained_variance_ratio,
        singular_values,
        mean,
        total_variance,
        n_fitted: n,
    })
}

impl PcaModel {
    pub fn n_components(&self) -> usize {
        self.components.rows()
    }

    pub fn n_dims(&self) -> usize {
        self.mean.len()
    }

    pub fn cumulative_ratio(&self) -> Vec<f64> {
        self.explained_variance_ratio
            .iter()
            .scan(0.0, |acc, r| {
                *acc += r;
                Some(*acc)
            })
            .collect()
    }

    /// Scores on the selected components: `(x - mean) · component`.
    pub fn project(&self, m: &EmbeddingMatrix, components: &[usize]) -> Result<ScoreMatrix> {
        if m.n_dims() != self.n_dims() {
            return Err(Error::DimensionMismatch {
                row: 1,
                expected: self.n_dims(),
                found: m.n_dims(),
            });
        }
        if let Some(&bad) = components.iter().find(|&&c| c >= self.n_components()) {
            return Err(Error::invalid(format!(
                "component index {bad} out of range (model has {})",
                self.n_components()
            )));
        }
        let rows = crate::par::map_range(m.n_rows(), |i| {
            let centered: Vec<f64> = m.row(i).iter().zip(&self.mean).map(|(x, mu)| x - mu).collect();
            components
                .iter()
                .map(|&c| dot(&centered, self.components.row(c)))
                .collect::<Vec<f64>>()
        });
        let values = if rows.is_empty() {
            Dense::zeros(0, components.len())
        } else {
            Dense::from_rows(&rows)?
        };
        Ok(ScoreMatrix {
            sample_ids: m.sample_ids().to_vec(),
            labels: m.labels().map(<[String]>::to_vec),
            column_names: components.iter().map(|c| format!("PC{}", c + 1)).collect(),
            values,
        })
    }

    /// Projects onto every fitted component.
    pub fn project_all(&self, m: &EmbeddingMatrix) -> Result<ScoreMatrix> {
        let all: Vec<usize> = (0..self.n_components()).collect();
        self.project(m, &all)
    }

    /// Maps full score rows (all K components) back to the input space.
    pub fn reconstruct(&self, scores: &Dense) -> Result<Dense> {
        if scores.cols() != self.n_components() {
            return Err(Error::DimensionMismatch {
                row: 1,
                expected: self.n_components(),
                found: scores.cols(),
            });
        }
        let mut out = Dense::zeros(scores.rows(), self.n_dims());
        for i in 0..scores.rows() {
            let dst = out.row_mut(i);
            dst.copy_from_slice(&self.mean);
            for (c, &s) in scores.row(i).iter().enumerate() {
                for (d, &w) in dst.iter_mut().zip(self.components.row(c)) {
                    *d += s * w;
                }
            }
        }
        Ok(out)
    }

    /// Scree table: `component,variance,ratio,cumulative` (1-based components).
    pub fn scree_csv(&self) -> String {
        use crate::stats::scores::fmt_sig9;
        let mut out = String::from("component,variance,ratio,cumulative\n");
        for (i, ((v, r), c)) in self
            .explained_variance
            .iter()
            .zip(&self.explained_variance_ratio)
            .zip(self.cumulative_ratio())
            .enumerate()
        {
            out.push_str(&format!(
                "{},{},{},{}\n",
                i + 1,
                fmt_sig9(*v),
                fmt_sig9(*r),
                fmt_sig9(c)
            ));
        }
        out
    }
}
