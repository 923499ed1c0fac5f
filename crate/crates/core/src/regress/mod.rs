//! Cluster regression: OLS of a latent score on an indicator feature, with
//! R², Pearson r, the F statistic and its p-value.

pub mod fdist;
pub mod ols;

pub use fdist::{f_cdf, f_sf, inc_beta, ln_gamma};
pub use ols::{regress_indicator, regress_multi, Design, FStatistic, RegressionReport};
