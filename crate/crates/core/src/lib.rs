//! Embedding-space forensics.
//!
//! Treats the output of a deep feature embedder as an engineered feature
//! matrix and provides the analysis pipeline on top of it: standardization
//! and PCA, linear discriminant analysis, cluster regression of component
//! scores on interpretable indicator features, and isolation-forest
//! detection of synthetic samples mixed into a reference set.

pub mod anomaly;
pub mod cli;
pub mod discriminant;
pub mod error;
pub mod featurize;
pub mod ingest;
pub mod linalg;
pub mod par;
pub mod regress;
pub mod seed;
pub mod stats;

pub use error::{Error, Result};
pub use ingest::{EmbeddingMatrix, LabeledDataset};
pub use linalg::Dense;
