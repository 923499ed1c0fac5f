//! ROC curves, exact AUROC, and tree-count tuning.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Dense;

use super::forest::{fit_forest, scores_from_paths};

/// Tree counts evaluated by [`tune_forest`].
pub const TREE_GRID: [usize; 6] = [10, 25, 50, 100, 150, 200];
pub const MAX_TREES: usize = 200;

/// Threshold sweep from the highest score downwards. `tpr[0] = fpr[0] = 0`;
/// entry `i + 1` holds the rates when predicting positive for `score >= thresholds[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub thresholds: Vec<f64>,
    pub tpr: Vec<f64>,
    pub fpr: Vec<f64>,
    pub auroc: f64,
}

fn counts(truth: &[u8]) -> Result<(u64, u64)> {
    let mut p = 0u64;
    for (i, &t) in truth.iter().enumerate() {
        match t {
            0 => {}
            1 => p += 1,
            _ => {
                return Err(Error::Malformed {
                    row: i + 1,
                    message: format!("truth must be 0 or 1, got {t}"),
                })
            }
        }
    }
    let n = truth.len() as u64 - p;
    if p == 0 || n == 0 {
        return Err(Error::invalid("ROC needs both positive and negative samples"));
    }
    Ok((p, n))
}

pub fn roc(scores: &[f64], truth: &[u8]) -> Result<RocCurve> {
    if scores.len() != truth.len() {
        return Err(Error::RowCountMismatch {
            expected: truth.len(),
            found: scores.len(),
        });
    }
    if let Some(i) = scores.iter().position(|s| s.is_nan()) {
        return Err(Error::NonFinite { row: i + 1, col: 0 });
    }
    let (p, n) = counts(truth)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut thresholds = Vec::new();
    let mut tp_counts = vec![0u64];
    let mut fp_counts = vec![0u64];
    let (mut tp, mut fp) = (0u64, 0u64);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if truth[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        thresholds.push(s);
        tp_counts.push(tp);
        fp_counts.push(fp);
    }
    // Trapezoid area in integer units of 1/(2PN).
    let twice_area: u128 = (1..tp_counts.len())
        .map(|k| {
            (fp_counts[k] - fp_counts[k - 1]) as u128 * (tp_counts[k] + tp_counts[k - 1]) as u128
        })
        .sum();
    let auroc = twice_area as f64 / (2 * p as u128 * n as u128) as f64;
    Ok(RocCurve {
        thresholds,
        tpr: tp_counts.iter().map(|&t| t as f64 / p as f64).collect(),
        fpr: fp_counts.iter().map(|&f| f as f64 / n as f64).collect(),
        auroc,
    })
}

pub fn auroc(scores: &[f64], truth: &[u8]) -> Result<f64> {
    roc(scores, truth).map(|r| r.auroc)
}

impl RocCurve {
    /// TPR at `fpr = x`, linear between sweep points; vertical steps take their upper end.
    pub fn tpr_at(&self, x: f64) -> f64 {
        let k = self.fpr.partition_point(|&f| f <= x);
        if k == 0 {
            return 0.0;
        }
        let (f0, t0) = (self.fpr[k - 1], self.tpr[k - 1]);
        if k == self.fpr.len() {
            return t0;
        }
        let (f1, t1) = (self.fpr[k], self.tpr[k]);
        t0 + (t1 - t0) * (x - f0) / (f1 - f0)
    }
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Pointwise median TPR over an evenly spaced FPR grid of `points` values in [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MedianRoc {
    pub fpr: Vec<f64>,
    pub tpr: Vec<f64>,
}

pub fn median_roc(curves: &[RocCurve], points: usize) -> Result<MedianRoc> {
    if curves.is_empty() || points < 2 {
        return Err(Error::invalid("median ROC needs at least one curve and two grid points"));
    }
    let fpr: Vec<f64> = (0..points).map(|i| i as f64 / (points - 1) as f64).collect();
    let tpr = fpr
        .iter()
        .map(|&x| {
            let mut v: Vec<f64> = curves.iter().map(|c| c.tpr_at(x)).collect();
            median(&mut v)
        })
        .collect();
    Ok(MedianRoc { fpr, tpr })
}

/// Grid entries not above `max_trees`; `[max_trees]` when it is below the smallest entry.
pub fn tree_grid(max_trees: usize) -> Vec<usize> {
    let g: Vec<usize> = TREE_GRID.iter().copied().filter(|&t| t <= max_trees).collect();
    if g.is_empty() {
        vec![max_trees]
    } else {
        g
    }
}

/// Index of the largest value; values within 1e-12 of the best go to the earliest index.
pub(crate) fn argmax_first(values: &[f64]) -> usize {
    let best = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    values
        .iter()
        .position(|&v| v >= best - 1e-12)
        .unwrap_or(0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub best_n_trees: usize,
    pub grid: Vec<usize>,
    pub mean_auroc: Vec<f64>,
}

/// Chooses a tree count from the grid by mean AUROC over `seeds` forests.
/// The count-`T` forest for a seed is the first `T` trees of its `max_trees` forest.
pub fn tune_forest(
    scores: &Dense,
    truth: &[u8],
    max_trees: usize,
    seeds: usize,
    subsample: usize,
    root_seed: u64,
) -> Result<TuneResult> {
    if max_trees == 0 || max_trees > MAX_TREES {
        return Err(Error::invalid(format!("max_trees must lie in [1, {MAX_TREES}]")));
    }
    if seeds == 0 {
        return Err(Error::invalid("seeds must be at least 1"));
    }
    counts(truth)?;
    if truth.len() != scores.rows() {
        return Err(Error::RowCountMismatch {
            expected: scores.rows(),
            found: truth.len(),
        });
    }
    let grid = tree_grid(max_trees);
    let per_seed = crate::par::try_map_range(seeds, |s| -> Result<Vec<f64>> {
        let f = fit_forest(scores, max_trees, subsample, crate::seed::derive(root_seed, &[s as u64]))?;
        let paths = f.path_lengths(scores)?;
        grid.iter()
            .map(|&t| auroc(&scores_from_paths(&paths, t, subsample), truth))
            .collect()
    })?;
    let mean_auroc: Vec<f64> = (0..grid.len())
        .map(|g| per_seed.iter().map(|v| v[g]).sum::<f64>() / seeds as f64)
        .collect();
    Ok(TuneResult {
        best_n_trees: grid[argmax_first(&mean_auroc)],
        grid,
        mean_auroc,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pairwise(scores: &[f64], truth: &[u8]) -> f64 {
        let mut twice = 0u64;
        let mut pairs = 0u64;
        for i in 0..scores.len() {
            for j in 0..scores.len() {
                if truth[i] == 1 && truth[j] == 0 {
                    pairs += 1;
                    twice += match scores[i].partial_cmp(&scores[j]).unwrap() {
                        std::cmp::Ordering::Greater => 2,
                        std::cmp::Ordering::Equal => 1,
                        std::cmp::Ordering::Less => 0,
                    };
                }
            }
        }
        twice as f64 / (2 * pairs) as f64
    }

    #[test]
    fn examples() {
        assert_eq!(auroc(&[0.9, 0.8, 0.3, 0.2], &[1, 0, 1, 0]).unwrap(), 0.75);
        assert_eq!(auroc(&[0.9, 0.8, 0.3, 0.2], &[1, 1, 0, 0]).unwrap(), 1.0);
        assert_eq!(auroc(&[0.4; 6], &[1, 0, 1, 0, 0, 0]).unwrap(), 0.5);
        assert_eq!(auroc(&[0.1, 0.2], &[1, 0]).unwrap(), 0.0);
    }

    #[test]
    fn curve_shape() {
        let r = roc(&[0.9, 0.8, 0.8, 0.2], &[1, 0, 1, 0]).unwrap();
        assert_eq!(r.thresholds, vec![0.9, 0.8, 0.2]);
        assert_eq!(r.tpr, vec![0.0, 0.5, 1.0, 1.0]);
        assert_eq!(r.fpr, vec![0.0, 0.0, 0.5, 1.0]);
        assert_eq!(r.tpr_at(0.25), 0.75);
        assert_eq!(r.tpr_at(0.0), 0.5);
        assert_eq!(r.tpr_at(1.0), 1.0);
    }

    #[test]
    fn errors() {
        assert!(roc(&[0.1, 0.2], &[1, 1]).is_err());
        assert!(roc(&[0.1, 0.2], &[1]).is_err());
        assert!(roc(&[0.1, 0.2], &[1, 2]).is_err());
        assert!(roc(&[f64::NAN, 0.2], &[1, 0]).is_err());
    }

    #[test]
    fn medians() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
        let a = roc(&[1.0, 0.0], &[1, 0]).unwrap();
        let b = roc(&[0.0, 1.0], &[1, 0]).unwrap();
        let c = roc(&[0.5, 0.5], &[1, 0]).unwrap();
        let m = median_roc(&[a, b, c], 3).unwrap();
        assert_eq!(m.fpr, vec![0.0, 0.5, 1.0]);
        assert_eq!(m.tpr, vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn tuning_on_separated_data_picks_smallest() {
        let mut rows: Vec<[f64; 2]> = (0..60).map(|i| [(i % 10) as f64 * 0.01, (i / 10) as f64 * 0.01]).collect();
        rows.extend([[50.0, 50.0], [-50.0, 60.0], [70.0, -40.0]]);
        let x = Dense::from_rows(&rows).unwrap();
        let mut truth = vec![0u8; 60];
        truth.extend([1, 1, 1]);
        let r = tune_forest(&x, &truth, 200, 5, 63, 9).unwrap();
        assert_eq!(r.grid, TREE_GRID.to_vec());
        assert!(r.mean_auroc.iter().all(|&a| a == 1.0));
        assert_eq!(r.best_n_trees, 10);
        assert!(tune_forest(&x, &truth, 201, 5, 63, 9).is_err());
        assert_eq!(tree_grid(60), vec![10, 25, 50]);
        assert_eq!(tree_grid(5), vec![5]);
    }

    proptest! {
        #[test]
        fn matches_pairwise_oracle(
            data in prop::collection::vec((0u8..6, 0u8..2), 2..60)
        ) {
            let scores: Vec<f64> = data.iter().map(|d| d.0 as f64 / 5.0).collect();
            let truth: Vec<u8> = data.iter().map(|d| d.1).collect();
            prop_assume!(truth.contains(&0) && truth.contains(&1));
            let r = roc(&scores, &truth).unwrap();
            prop_assert_eq!(r.auroc, pairwise(&scores, &truth));
            for w in r.tpr.windows(2) { prop_assert!(w[1] >= w[0]); }
            for w in r.fpr.windows(2) { prop_assert!(w[1] >= w[0]); }
            prop_assert_eq!(*r.tpr.last().unwrap(), 1.0);
            prop_assert_eq!(*r.fpr.last().unwrap(), 1.0);
        }
    }
}
