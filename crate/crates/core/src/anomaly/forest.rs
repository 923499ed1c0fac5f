//! Isolation forest over a dense score matrix.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Dense;
use crate::seed;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const EXACT_HARMONIC_LIMIT: usize = 10_000;

/// Default subsample size: `min(256, n)`.
pub fn default_subsample(n: usize) -> usize {
    n.min(256)
}

pub fn harmonic(n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    if n <= EXACT_HARMONIC_LIMIT {
        // Summed smallest-first for accuracy.
        (1..=n).rev().map(|k| 1.0 / k as f64).sum()
    } else {
        let x = n as f64;
        x.ln() + EULER_GAMMA + 1.0 / (2.0 * x)
    }
}

/// Average unsuccessful-search path length in a binary search tree of `n` keys.
pub fn c_factor(n: usize) -> f64 {
    if n <= 1 {
        return 0.0;
    }
    let m = (n - 1) as f64;
    2.0 * harmonic(n - 1) - 2.0 * m / n as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Internal {
        dim: usize,
        value: f64,
        left: usize,
        right: usize,
        size: usize,
        depth: usize,
    },
    Leaf {
        size: usize,
        depth: usize,
    },
}

impl Node {
    pub fn size(&self) -> usize {
        match *self {
            Node::Internal { size, .. } | Node::Leaf { size, .. } => size,
        }
    }

    pub fn depth(&self) -> usize {
        match *self {
            Node::Internal { depth, .. } | Node::Leaf { depth, .. } => depth,
        }
    }
}

/// One isolation tree. Node 0 is the root; `subsample` lists the rows it was grown on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsolationTree {
    pub nodes: Vec<Node>,
    pub subsample: Vec<usize>,
}

impl IsolationTree {
    pub fn max_depth(&self) -> usize {
        self.nodes.iter().map(Node::depth).max().unwrap_or(0)
    }

    /// Path length of `x`, including the `c(size)` adjustment at the leaf.
    pub fn path_length(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Internal { dim, value, left, right, .. } => {
                    i = if x[dim] < value { left } else { right };
                }
                Node::Leaf { size, depth } => return depth as f64 + c_factor(size),
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsolationForestModel {
    pub trees: Vec<IsolationTree>,
    pub n_trees: usize,
    pub subsample_size: usize,
    pub height_limit: usize,
    pub n_dims: usize,
    pub seed: u64,
}

fn height_limit(psi: usize) -> usize {
    // ceil(log2(psi)) for psi >= 1
    (usize::BITS - (psi.max(1) - 1).leading_zeros()) as usize
}

struct Builder<'a> {
    data: &'a Dense,
    limit: usize,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    fn grow(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { size: rows.len(), depth });
        if depth >= self.limit || rows.len() <= 1 {
            return id;
        }
        let d = self.data.cols();
        let mut ranges = Vec::with_capacity(d);
        for j in 0..d {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for &r in &rows {
                let v = self.data.get(r, j);
                lo = lo.min(v);
                hi = hi.max(v);
            }
            if lo < hi {
                ranges.push((j, lo, hi));
            }
        }
        if ranges.is_empty() {
            return id;
        }
        let (dim, lo, hi) = ranges[self.rng.random_range(0..ranges.len())];
        let value = loop {
            let v = lo + self.rng.random::<f64>() * (hi - lo);
            if v > lo && v < hi {
                break v;
            }
        };
        let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| self.data.get(i, dim) < value);
        let size = rows.len();
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[id] = Node::Internal { dim, value, left, right, size, depth };
        id
    }
}

/// Grows `n_trees` trees on subsamples of `subsample` rows. Tree `t` uses
/// the stream `derive(seed, [t])`.
pub fn fit_forest(scores: &Dense, n_trees: usize, subsample: usize, seed: u64) -> Result<IsolationForestModel> {
    let n = scores.rows();
    if n < 2 {
        return Err(Error::InsufficientRows {
            what: "isolation forest".into(),
            needed: 2,
            available: n,
        });
    }
    if n_trees == 0 {
        return Err(Error::invalid("n_trees must be at least 1"));
    }
    if subsample < 2 || subsample > n {
        return Err(Error::invalid(format!(
            "subsample size must lie in [2, {n}], got {subsample}"
        )));
    }
    if let Some((r, c)) = scores.first_non_finite() {
        return Err(Error::NonFinite { row: r + 1, col: c });
    }
    let limit = height_limit(subsample);
    let trees = crate::par::map_range(n_trees, |t| {
        let mut rng = seed::rng(seed::derive(seed, &[t as u64]));
        let mut idx = rand::seq::index::sample(&mut rng, n, subsample).into_vec();
        idx.sort_unstable();
        let mut b = Builder { data: scores, limit, rng, nodes: Vec::new() };
        b.grow(idx.clone(), 0);
        IsolationTree { nodes: b.nodes, subsample: idx }
    });
    Ok(IsolationForestModel {
        trees,
        n_trees,
        subsample_size: subsample,
        height_limit: limit,
        n_dims: scores.cols(),
        seed,
    })
}

impl IsolationForestModel {
    fn check(&self, rows: &Dense) -> Result<()> {
        if rows.cols() != self.n_dims {
            return Err(Error::DimensionMismatch {
                row: 1,
                expected: self.n_dims,
                found: rows.cols(),
            });
        }
        Ok(())
    }

    /// Per-row, per-tree path lengths (N×T).
    pub fn path_lengths(&self, rows: &Dense) -> Result<Dense> {
        self.check(rows)?;
        let per_row = crate::par::map_range(rows.rows(), |i| {
            let x = rows.row(i);
            self.trees.iter().map(|t| t.path_length(x)).collect::<Vec<_>>()
        });
        Dense::from_rows(&per_row)
    }

    /// Anomaly scores `2^(-E[h]/c(psi))`; higher is more anomalous.
    pub fn score(&self, rows: &Dense) -> Result<Vec<f64>> {
        let h = self.path_lengths(rows)?;
        Ok(scores_from_paths(&h, self.n_trees, self.subsample_size))
    }
}

/// Scores using only the first `n_trees` columns of a path-length matrix.
pub fn scores_from_paths(paths: &Dense, n_trees: usize, subsample: usize) -> Vec<f64> {
    let t = n_trees.min(paths.cols()).max(1);
    let c = c_factor(subsample);
    paths
        .iter_rows()
        .map(|r| {
            let mean = r[..t].iter().sum::<f64>() / t as f64;
            2f64.powf(-mean / c)
        })
        .collect()
}

pub fn score(model: &IsolationForestModel, rows: &Dense) -> Result<Vec<f64>> {
    model.score(rows)
}
