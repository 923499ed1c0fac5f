//! Isolation-forest contamination detection and ROC evaluation.

pub mod experiment;
pub mod forest;
pub mod roc;

pub use experiment::{
    run_contamination_experiment, CellSummary, ContaminationSpec, ExperimentResult, TrialRow,
    DEFAULT_M, DEFAULT_N,
};
pub use forest::{c_factor, default_subsample, fit_forest, score, IsolationForestModel, IsolationTree, Node};
pub use roc::{auroc, median_roc, roc, tune_forest, MedianRoc, RocCurve, TuneResult, TREE_GRID};
