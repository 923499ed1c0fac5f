//! Standardization, PCA, scree-based component budgets and 1-D kernel
//! density estimates over component scores.

pub mod kde;
pub mod pca;
pub mod scaler;
pub mod scores;
pub mod scree;

pub use kde::{kde_eval, scott_bandwidth, KdeModel};
pub use pca::{fit_pca, max_components, PcaModel};
pub use scaler::{fit_scaler, transform, Scaler};
pub use scores::ScoreMatrix;
pub use scree::{scree_elbow, ComponentBudget};
