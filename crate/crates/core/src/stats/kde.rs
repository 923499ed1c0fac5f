use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gaussian kernel density estimate over 1-D scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KdeModel {
    points: Vec<f64>,
    bandwidth: f64,
}

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

impl KdeModel {
    pub fn new(points: Vec<f64>, bandwidth: f64) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InsufficientRows {
                what: "kernel density estimate".into(),
                needed: 2,
                available: points.len(),
            });
        }
        if let Some(i) = points.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { row: i + 1, col: 0 });
        }
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(Error::invalid(format!("bandwidth must be positive, got {bandwidth}")));
        }
        Ok(KdeModel { points, bandwidth })
    }

    /// Bandwidth from Scott's rule, `h = σ̂ · N^(-1/5)` with the sample
    /// standard deviation.
    pub fn with_scott_bandwidth(points: Vec<f64>) -> Result<Self> {
        let h = scott_bandwidth(&points)?;
        Self::new(points, h)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn density(&self, x: f64) -> f64 {
        let h = self.bandwidth;
        let sum: f64 = self
            .points
            .iter()
            .map(|&p| {
                let u = (x - p) / h;
                (-0.5 * u * u).exp()
            })
            .sum();
        sum * INV_SQRT_2PI / (self.points.len() as f64 * h)
    }

    pub fn eval(&self, xs: &[f64]) -> Vec<f64> {
        crate::par::map_slice(xs, |&x| self.density(x))
    }

    /// `n` evenly spaced query points spanning the data plus `pad` bandwidths each side.
    pub fn grid(&self, n: usize, pad: f64) -> Vec<f64> {
        let lo = self.points.iter().cloned().fold(f64::INFINITY, f64::min) - pad * self.bandwidth;
        let hi = self.points.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + pad * self.bandwidth;
        if n < 2 {
            return vec![(lo + hi) / 2.0];
        }
        (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect()
    }
}

pub fn scott_bandwidth(points: &[f64]) -> Result<f64> {
    let n = points.len();
    if n < 2 {
        return Err(Error::InsufficientRows {
            what: "bandwidth selection".into(),
            needed: 2,
            available: n,
        });
    }
    let mean = points.iter().sum::<f64>() / n as f64;
    let var = points.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let h = var.sqrt() * (n as f64).powf(-0.2);
    if h > 0.0 && h.is_finite() {
        Ok(h)
    } else {
        Err(Error::Degenerate(
            "scores have zero spread; pass an explicit bandwidth".into(),
        ))
    }
}

/// Free-function form of [`KdeModel::eval`].
pub fn kde_eval(k: &KdeModel, xs: &[f64]) -> Vec<f64> {
    k.eval(xs)
}
