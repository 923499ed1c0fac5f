//! Multi-class linear discriminant analysis.
//!
//! Fitting whitens the within-class covariance with a truncated SVD, then
//! diagonalizes the whitened between-class scatter. Within-class variances
//! below `RANK_TOL · s_max²` are floored at that threshold rather than
//! inverted, and directions of the class-mean differences that fall outside
//! the retained within-class subspace are kept with the floor variance, so
//! classes with (near) zero spread stay separable. With shrinkage `λ` the
//! covariance is `(1 − λ)·S_W + λ·(tr S_W / D)·I`, handled exactly in the
//! same reduced basis.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::EmbeddingMatrix;
use crate::linalg::{dot, norm2, Dense};
use crate::stats::ScoreMatrix;

/// Relative singular-value cutoff for both SVD stages.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaModel {
    pub class_names: Vec<String>,
    pub class_means: Dense,
    pub priors: Vec<f64>,
    pub overall_mean: Vec<f64>,
    /// Unit-length discriminant directions in input space, one per row.
    pub discriminant_axes: Dense,
    /// Length of each unnormalized axis; `score = scale · axis · (x − mean)`.
    pub projection_scalings: Vec<f64>,
    /// Share of between-class scatter carried by each axis.
    pub explained_variance_ratio: Vec<f64>,
    /// Class means in discriminant coordinates (C × n_axes).
    pub projected_means: Dense,
    pub shrinkage: Option<f64>,
    pub shrinkage_used: bool,
    /// Rank of the retained within-class subspace.
    pub within_rank: usize,
    /// Mean-difference directions carried at the floor variance.
    pub floored_directions: usize,
}

fn class_index_of(labels: &[String]) -> (Vec<String>, Vec<usize>) {
    let mut names: Vec<String> = labels.to_vec();
    names.sort();
    names.dedup();
    let idx = labels
        .iter()
        .map(|l| names.binary_search(l).expect("label present"))
        .collect();
    (names, idx)
}

/// Fits LDA on `train` with one label per row.
pub fn fit_lda(train: &EmbeddingMatrix, labels: &[String], shrinkage: Option<f64>) -> Result<LdaModel> {
    let (n, d) = (train.n_rows(), train.n_dims());
    if labels.len() != n {
        return Err(Error::RowCountMismatch {
            expected: n,
            found: labels.len(),
        });
    }
    if let Some(l) = shrinkage {
        if !(0.0..=1.0).contains(&l) {
            return Err(Error::invalid(format!("shrinkage must lie in [0, 1], got {l}")));
        }
    }
    let (class_names, y) = class_index_of(labels);
    let c = class_names.len();
    if c < 2 {
        return Err(Error::invalid("LDA needs at least two classes"));
    }
    let mut counts = vec![0usize; c];
    y.iter().for_each(|&k| counts[k] += 1);
    if let Some(k) = counts.iter().position(|&m| m < 2) {
        return Err(Error::InsufficientRows {
            what: format!("LDA class {:?}", class_names[k]),
            needed: 2,
            available: counts[k],
        });
    }
    let x = train.values();

    let mut class_means = Dense::zeros(c, d);
    for (i, &k) in y.iter().enumerate() {
        for (m, &v) in class_means.row_mut(k).iter_mut().zip(x.row(i)) {
            *m += v;
        }
    }
    for k in 0..c {
        let cnt = counts[k] as f64;
        class_means.row_mut(k).iter_mut().for_each(|m| *m /= cnt);
    }
    let priors: Vec<f64> = counts.iter().map(|&m| m as f64 / n as f64).collect();
    let mut overall_mean = vec![0.0; d];
    for k in 0..c {
        for (o, &m) in overall_mean.iter_mut().zip(class_means.row(k)) {
            *o += priors[k] * m;
        }
    }

    // Stage 1: within-class covariance via SVD of the class-centered rows.
    let dof = (n - c) as f64;
    let scale = 1.0 / dof.sqrt();
    let mut xw = DMatrix::<f64>::zeros(n, d);
    for (i, &k) in y.iter().enumerate() {
        let mean = class_means.row(k);
        for j in 0..d {
            xw[(i, j)] = (x.get(i, j) - mean[j]) * scale;
        }
    }
    let svd = xw.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let s = svd.singular_values;
    let s_max = s.iter().cloned().fold(0.0, f64::max);
    let trace: f64 = s.iter().map(|v| v * v).sum();
    let lambda = shrinkage.unwrap_or(0.0);
    let ridge = lambda * trace / d as f64;
    let floor = if s_max > 0.0 {
        (RANK_TOL * s_max).powi(2)
    } else {
        1.0
    };

    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut variances: Vec<f64> = Vec::new();
    for (j, &sv) in s.iter().enumerate() {
        if s_max > 0.0 && sv > RANK_TOL * s_max {
            basis.push(v_t.row(j).iter().copied().collect());
            variances.push((1.0 - lambda) * sv * sv + ridge);
        }
    }
    let within_rank = basis.len();
    let perp_variance = if lambda > 0.0 { ridge } else { floor };

    // Components of the centered class means outside the retained subspace.
    let centered_means: Vec<Vec<f64>> = (0..c)
        .map(|k| {
            class_means
                .row(k)
                .iter()
                .zip(&overall_mean)
                .map(|(m, o)| m - o)
                .collect()
        })
        .collect();
    let mean_scale = centered_means.iter().map(|v| norm2(v)).fold(0.0, f64::max);
    if mean_scale == 0.0 {
        return Err(Error::Degenerate(
            "class means coincide; there is no between-class signal".into(),
        ));
    }
    let mut floored_directions = 0;
    for m in &centered_means {
        let mut r = m.clone();
        for b in &basis {
            let p = dot(&r, b);
            r.iter_mut().zip(b).for_each(|(ri, bi)| *ri -= p * bi);
        }
        // second Gram-Schmidt pass keeps the residual orthogonal in floating point
        for b in &basis {
            let p = dot(&r, b);
            r.iter_mut().zip(b).for_each(|(ri, bi)| *ri -= p * bi);
        }
        let nr = norm2(&r);
        if nr > 1e-8 * mean_scale {
            r.iter_mut().for_each(|v| *v /= nr);
            basis.push(r);
            variances.push(perp_variance);
            floored_directions += 1;
        }
    }
    let q = basis.len();
    let inv_sd: Vec<f64> = variances.iter().map(|v| 1.0 / v.sqrt()).collect();

    // Stage 2: whitened, prior-weighted class means.
    let mut between = DMatrix::<f64>::zeros(c, q);
    for k in 0..c {
        let w = (n as f64 * priors[k] / dof).sqrt();
        for j in 0..q {
            between[(k, j)] = w * dot(&centered_means[k], &basis[j]) * inv_sd[j];
        }
    }
    let bsvd = between.svd(false, true);
    let bv_t = bsvd.v_t.expect("requested V^T");
    let bs = bsvd.singular_values;
    let mut order: Vec<usize> = (0..bs.len()).collect();
    order.sort_by(|&a, &b| bs[b].total_cmp(&bs[a]).then(a.cmp(&b)));
    let b_max = bs[order[0]];
    let axes_idx: Vec<usize> = order
        .into_iter()
        .filter(|&j| bs[j] > RANK_TOL * b_max)
        .take(c - 1)
        .collect();
    if axes_idx.is_empty() {
        return Err(Error::Degenerate("no discriminant direction found".into()));
    }
    let total_between: f64 = bs.iter().map(|v| v * v).sum();

    let mut discriminant_axes = Dense::zeros(axes_idx.len(), d);
    let mut projection_scalings = Vec::with_capacity(axes_idx.len());
    let mut explained_variance_ratio = Vec::with_capacity(axes_idx.len());
    for (a, &j) in axes_idx.iter().enumerate() {
        // axis in input space: Σ_t basis_t · inv_sd_t · v_t
        let mut w = vec![0.0; d];
        for t in 0..q {
            let coef = inv_sd[t] * bv_t[(j, t)];
            w.iter_mut().zip(&basis[t]).for_each(|(wi, bi)| *wi += coef * bi);
        }
        let len = norm2(&w);
        w.iter_mut().for_each(|v| *v /= len);
        // class 0 projects to the negative side
        if dot(&centered_means[0], &w) > 0.0 {
            w.iter_mut().for_each(|v| *v = -*v);
        }
        discriminant_axes.row_mut(a).copy_from_slice(&w);
        projection_scalings.push(len);
        explained_variance_ratio.push(bs[j] * bs[j] / total_between);
    }

    let mut model = LdaModel {
        class_names,
        class_means,
        priors,
        overall_mean,
        discriminant_axes,
        projection_scalings,
        explained_variance_ratio,
        projected_means: Dense::zeros(0, 0),
        shrinkage,
        shrinkage_used: lambda > 0.0,
        within_rank,
        floored_directions,
    };
    let mut pm = Dense::zeros(c, model.n_axes());
    for k in 0..c {
        let z = model.project_row(model.class_means.row(k));
        pm.row_mut(k).copy_from_slice(&z);
    }
    model.projected_means = pm;
    Ok(model)
}

impl LdaModel {
    pub fn n_axes(&self) -> usize {
        self.discriminant_axes.rows()
    }

    pub fn n_dims(&self) -> usize {
        self.overall_mean.len()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    fn project_row(&self, x: &[f64]) -> Vec<f64> {
        let centered: Vec<f64> = x.iter().zip(&self.overall_mean).map(|(a, m)| a - m).collect();
        (0..self.n_axes())
            .map(|a| self.projection_scalings[a] * dot(&centered, self.discriminant_axes.row(a)))
            .collect()
    }

    /// Linear discriminant score of each class for one input row.
    pub fn decision_scores(&self, x: &[f64]) -> Vec<f64> {
        let z = self.project_row(x);
        (0..self.n_classes())
            .map(|k| {
                let m = self.projected_means.row(k);
                dot(&z, m) - 0.5 * dot(m, m) + self.priors[k].ln()
            })
            .collect()
    }

    fn check_dims(&self, m: &EmbeddingMatrix) -> Result<()> {
        if m.n_dims() != self.n_dims() {
            return Err(Error::DimensionMismatch {
                row: 1,
                expected: self.n_dims(),
                found: m.n_dims(),
            });
        }
        Ok(())
    }

    /// Predicted class index per row; near-ties go to the lowest index.
    pub fn predict_indices(&self, m: &EmbeddingMatrix) -> Result<Vec<usize>> {
        self.check_dims(m)?;
        Ok(crate::par::map_range(m.n_rows(), |i| {
            argmax_lowest(&self.decision_scores(m.row(i)))
        }))
    }

    pub fn predict(&self, m: &EmbeddingMatrix) -> Result<Vec<String>> {
        Ok(self
            .predict_indices(m)?
            .into_iter()
            .map(|k| self.class_names[k].clone())
            .collect())
    }

    /// Scores on the requested discriminant axes (0-based).
    pub fn transform(&self, m: &EmbeddingMatrix, axes: &[usize]) -> Result<ScoreMatrix> {
        self.check_dims(m)?;
        if let Some(&bad) = axes.iter().find(|&&a| a >= self.n_axes()) {
            return Err(Error::invalid(format!(
                "discriminant axis {bad} out of range (model has {})",
                self.n_axes()
            )));
        }
        let rows = crate::par::map_range(m.n_rows(), |i| {
            let z = self.project_row(m.row(i));
            axes.iter().map(|&a| z[a]).collect::<Vec<f64>>()
        });
        let values = if rows.is_empty() {
            Dense::zeros(0, axes.len())
        } else {
            Dense::from_rows(&rows)?
        };
        Ok(ScoreMatrix {
            sample_ids: m.sample_ids().to_vec(),
            labels: m.labels().map(<[String]>::to_vec),
            column_names: axes.iter().map(|a| format!("LD{}", a + 1)).collect(),
            values,
        })
    }

    /// Class index per label, failing on labels the model never saw.
    pub fn encode_labels(&self, labels: &[String]) -> Result<Vec<usize>> {
        labels
            .iter()
            .map(|l| {
                self.class_names
                    .iter()
                    .position(|c| c == l)
                    .ok_or_else(|| Error::UnknownLabel(l.clone()))
            })
            .collect()
    }
}

fn argmax_lowest(scores: &[f64]) -> usize {
    let mut best = 0;
    for k in 1..scores.len() {
        let tol = 1e-9 * scores[best].abs().max(1.0);
        if scores[k] > scores[best] + tol {
            best = k;
        }
    }
    best
}

pub fn predict(model: &LdaModel, m: &EmbeddingMatrix) -> Result<Vec<String>> {
    model.predict(m)
}

pub fn transform_ld(model: &LdaModel, m: &EmbeddingMatrix, axes: &[usize]) -> Result<ScoreMatrix> {
    model.transform(m, axes)
}
