//! Contamination sweep: mix `M` synthetic rows into `N` reference rows and
//! measure how well an isolation forest on PCA scores ranks them first.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::EmbeddingMatrix;
use crate::linalg::Dense;
use crate::seed;
use crate::stats::{fit_pca, fit_scaler, max_components, ComponentBudget};

use super::forest::{default_subsample, fit_forest, scores_from_paths};
use super::roc::{argmax_first, median, roc, tree_grid, MedianRoc, MAX_TREES};

pub const DEFAULT_N: [usize; 7] = [100, 200, 300, 400, 500, 1000, 2000];
pub const DEFAULT_M: [usize; 9] = [1, 2, 4, 6, 8, 10, 12, 15, 20];
pub const DEFAULT_SEEDS: usize = 50;
pub const ROC_GRID_POINTS: usize = 101;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContaminationSpec {
    pub n_reference: Vec<usize>,
    pub m_contaminants: Vec<usize>,
    pub n_pcs: ComponentBudget,
    pub seeds: usize,
    pub max_trees: usize,
    /// Forest subsample size; `min(256, N + M)` when unset.
    pub subsample: Option<usize>,
    pub standardize: bool,
    pub fit_pca_on_reference_only: bool,
    pub root_seed: u64,
}

impl ContaminationSpec {
    /// The full 7×9 sweep with 50 seeds and up to 200 trees.
    pub fn default_grid(n_pcs: ComponentBudget, root_seed: u64) -> Self {
        ContaminationSpec {
            n_reference: DEFAULT_N.to_vec(),
            m_contaminants: DEFAULT_M.to_vec(),
            n_pcs,
            seeds: DEFAULT_SEEDS,
            max_trees: MAX_TREES,
            subsample: None,
            standardize: true,
            fit_pca_on_reference_only: false,
            root_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_reference.is_empty() || self.m_contaminants.is_empty() {
            return Err(Error::invalid("N and M grids must be non-empty"));
        }
        if self.n_reference.contains(&0) {
            return Err(Error::invalid("reference sample size N must be positive"));
        }
        if self.m_contaminants.contains(&0) {
            return Err(Error::invalid(
                "contaminant count M must be positive; with M = 0 there are no positives to rank",
            ));
        }
        if self.seeds == 0 {
            return Err(Error::invalid("seeds must be at least 1"));
        }
        if self.max_trees == 0 || self.max_trees > MAX_TREES {
            return Err(Error::invalid(format!("max_trees must lie in [1, {MAX_TREES}]")));
        }
        if let ComponentBudget::Fixed(0) = self.n_pcs {
            return Err(Error::invalid("n_pcs must be positive"));
        }
        if let Some(&n) = self.n_reference.iter().min() {
            if let ComponentBudget::Fixed(k) = self.n_pcs {
                if k > n {
                    return Err(Error::invalid(format!("n_pcs = {k} exceeds N = {n}")));
                }
            }
        }
        Ok(())
    }
}

/// One (N, M, seed) evaluation at the cell's chosen tree count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub n: usize,
    pub m: usize,
    pub seed: usize,
    pub n_trees: usize,
    pub n_pcs: usize,
    pub auroc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub n: usize,
    pub m: usize,
    pub n_trees: usize,
    pub mean_auroc: f64,
    pub median_auroc: f64,
    pub tree_grid: Vec<usize>,
    pub grid_mean_auroc: Vec<f64>,
    pub median_roc: MedianRoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub spec: ContaminationSpec,
    pub rows: Vec<TrialRow>,
    pub cells: Vec<CellSummary>,
}

impl ExperimentResult {
    /// `N,M,seed,n_trees,auroc`
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("N,M,seed,n_trees,auroc\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.n,
                r.m,
                r.seed,
                r.n_trees,
                crate::stats::scores::fmt_sig9(r.auroc)
            ));
        }
        out
    }

    pub fn cell(&self, n: usize, m: usize) -> Option<&CellSummary> {
        self.cells.iter().find(|c| c.n == n && c.m == m)
    }
}

struct Trial {
    aurocs: Vec<f64>,
    roc_tpr: Vec<Vec<f64>>,
    n_pcs: usize,
}

fn sample_rows(m: &EmbeddingMatrix, k: usize, rng: &mut rand_chacha::ChaCha8Rng) -> Dense {
    let idx = rand::seq::index::sample(rng, m.n_rows(), k).into_vec();
    m.values().select_rows(&idx)
}

fn as_matrix(values: Dense) -> Result<EmbeddingMatrix> {
    let ids = (0..values.rows()).map(|i| format!("r{i}")).collect();
    EmbeddingMatrix::new(ids, values)
}

fn run_trial(
    reference: &EmbeddingMatrix,
    contaminants: &EmbeddingMatrix,
    spec: &ContaminationSpec,
    grid: &[usize],
    (n, m, s): (usize, usize, usize),
) -> Result<Trial> {
    let cell = seed::cell_seed(spec.root_seed, n, m, s);
    let mut rng = seed::rng(cell);
    let ref_rows = sample_rows(reference, n, &mut rng);
    let con_rows = sample_rows(contaminants, m, &mut rng);
    let all = as_matrix(ref_rows.vstack(&con_rows)?)?;
    let fit_on = if spec.fit_pca_on_reference_only {
        as_matrix(ref_rows)?
    } else {
        all.clone()
    };

    let (all, fit_on) = if spec.standardize {
        let sc = fit_scaler(&fit_on)?;
        (sc.transform(&all)?, sc.transform(&fit_on)?)
    } else {
        (all, fit_on)
    };

    let kmax = max_components(fit_on.n_rows(), fit_on.n_dims());
    let pca = fit_pca(&fit_on, kmax)?;
    let n_pcs = spec.n_pcs.resolve(&pca.explained_variance)?;
    if n_pcs > kmax {
        return Err(Error::invalid(format!(
            "n_pcs = {n_pcs} exceeds the {kmax} components available at N = {n}, M = {m}"
        )));
    }
    let keep: Vec<usize> = (0..n_pcs).collect();
    let scores = pca.project(&all, &keep)?.values;

    let total = n + m;
    let psi = spec.subsample.unwrap_or_else(|| default_subsample(total)).min(total);
    let forest = fit_forest(&scores, spec.max_trees, psi, seed::derive(cell, &[0xF0]))?;
    let paths = forest.path_lengths(&scores)?;
    let mut truth = vec![0u8; n];
    truth.resize(total, 1);

    let mut aurocs = Vec::with_capacity(grid.len());
    let mut roc_tpr = Vec::with_capacity(grid.len());
    for &t in grid {
        let curve = roc(&scores_from_paths(&paths, t, psi), &truth)?;
        aurocs.push(curve.auroc);
        roc_tpr.push(
            (0..ROC_GRID_POINTS)
                .map(|i| curve.tpr_at(i as f64 / (ROC_GRID_POINTS - 1) as f64))
                .collect(),
        );
    }
    Ok(Trial { aurocs, roc_tpr, n_pcs })
}

/// Runs every (N, M, seed) trial. Per cell, the tree count is the grid value
/// with the highest mean AUROC over seeds (ties to the smaller count); the
/// count-`T` forest is the first `T` trees of the trial's `max_trees` forest.
pub fn run_contamination_experiment(
    reference: &EmbeddingMatrix,
    contaminants: &EmbeddingMatrix,
    spec: &ContaminationSpec,
) -> Result<ExperimentResult> {
    spec.validate()?;
    if reference.n_dims() != contaminants.n_dims() {
        return Err(Error::DimensionMismatch {
            row: 1,
            expected: reference.n_dims(),
            found: contaminants.n_dims(),
        });
    }
    let max_n = *spec.n_reference.iter().max().expect("validated");
    let max_m = *spec.m_contaminants.iter().max().expect("validated");
    if max_n > reference.n_rows() {
        return Err(Error::InsufficientRows {
            what: "reference sample".into(),
            needed: max_n,
            available: reference.n_rows(),
        });
    }
    if max_m > contaminants.n_rows() {
        return Err(Error::InsufficientRows {
            what: "contaminant sample".into(),
            needed: max_m,
            available: contaminants.n_rows(),
        });
    }

    let grid = tree_grid(spec.max_trees);
    let mut tasks = Vec::new();
    for &n in &spec.n_reference {
        for &m in &spec.m_contaminants {
            for s in 0..spec.seeds {
                tasks.push((n, m, s));
            }
        }
    }
    let trials = crate::par::try_map_range(tasks.len(), |i| {
        run_trial(reference, contaminants, spec, &grid, tasks[i])
    })?;

    let mut rows = Vec::with_capacity(tasks.len());
    let mut cells = Vec::new();
    for (c, chunk) in trials.chunks(spec.seeds).enumerate() {
        let (n, m, _) = tasks[c * spec.seeds];
        let grid_mean_auroc: Vec<f64> = (0..grid.len())
            .map(|g| chunk.iter().map(|t| t.aurocs[g]).sum::<f64>() / spec.seeds as f64)
            .collect();
        let g = argmax_first(&grid_mean_auroc);
        let mut chosen: Vec<f64> = chunk.iter().map(|t| t.aurocs[g]).collect();
        for (s, t) in chunk.iter().enumerate() {
            rows.push(TrialRow {
                n,
                m,
                seed: s,
                n_trees: grid[g],
                n_pcs: t.n_pcs,
                auroc: t.aurocs[g],
            });
        }
        let tpr = (0..ROC_GRID_POINTS)
            .map(|p| {
                let mut v: Vec<f64> = chunk.iter().map(|t| t.roc_tpr[g][p]).collect();
                median(&mut v)
            })
            .collect();
        cells.push(CellSummary {
            n,
            m,
            n_trees: grid[g],
            mean_auroc: grid_mean_auroc[g],
            median_auroc: median(&mut chosen),
            tree_grid: grid.clone(),
            grid_mean_auroc,
            median_roc: MedianRoc {
                fpr: (0..ROC_GRID_POINTS)
                    .map(|i| i as f64 / (ROC_GRID_POINTS - 1) as f64)
                    .collect(),
                tpr,
            },
        });
    }
    Ok(ExperimentResult {
        spec: spec.clone(),
        rows,
        cells,
    })
}
