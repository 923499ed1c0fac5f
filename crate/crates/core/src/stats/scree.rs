use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How many components to keep: a fixed budget or the scree elbow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentBudget {
    Fixed(usize),
    Elbow,
}

impl std::str::FromStr for ComponentBudget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("elbow") {
            return Ok(Self::Elbow);
        }
        s.parse::<usize>()
            .ok()
            .filter(|&k| k > 0)
            .map(Self::Fixed)
            .ok_or_else(|| Error::invalid(format!("component budget must be a positive integer or `elbow`, got {s:?}")))
    }
}

impl ComponentBudget {
    /// Resolves against a fitted variance spectrum; fixed budgets pass through.
    pub fn resolve(self, variances: &[f64]) -> Result<usize> {
        match self {
            Self::Fixed(k) => Ok(k),
            Self::Elbow => scree_elbow(variances),
        }
    }
}

const TIE_TOL: f64 = 1e-12;

/// 1-based index of the scree point farthest from the chord joining the
/// first and last points. Ties go to the smaller index.
pub fn scree_elbow(variances: &[f64]) -> Result<usize> {
    let k = variances.len();
    if k < 3 {
        return Err(Error::invalid(format!(
            "scree elbow needs at least 3 variances, got {k}"
        )));
    }
    if let Some(i) = variances.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { row: i + 1, col: 0 });
    }
    if let Some(i) = variances.windows(2).position(|w| w[1] > w[0]) {
        return Err(Error::invalid(format!(
            "variances must be non-increasing (component {} < component {})",
            i + 1,
            i + 2
        )));
    }
    let (first, last) = (variances[0], variances[k - 1]);
    let range = first - last;
    if range <= 0.0 {
        return Ok(1);
    }
    // Perpendicular distance to the chord is proportional to the vertical
    // gap, so comparing gaps relative to the range picks the same point and
    // is invariant to rescaling the spectrum.
    let span = (k - 1) as f64;
    let mut best = 0;
    let mut best_gap = f64::NEG_INFINITY;
    for (i, &v) in variances.iter().enumerate() {
        let chord = first - range * (i as f64) / span;
        let gap = (chord - v).abs() / range;
        if gap > best_gap + TIE_TOL {
            best = i;
            best_gap = gap;
        }
    }
    Ok(best + 1)
}
