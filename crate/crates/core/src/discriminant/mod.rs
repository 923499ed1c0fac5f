//! Linear discriminant analysis with seeded train/test splits and
//! confusion-matrix evaluation.

pub mod confusion;
pub mod lda;
pub mod split;

pub use confusion::{evaluate, ConfusionMatrix};
pub use lda::{fit_lda, predict, transform_ld, LdaModel};
pub use split::{partition, split, Partition, SplitSpec};
