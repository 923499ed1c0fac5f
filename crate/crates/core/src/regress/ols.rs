//! Ordinary least squares of component scores against indicator features.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::Dense;
use crate::regress::fdist::f_sf;

/// p-values below this are reported as exactly 0.
pub const P_VALUE_FLOOR: f64 = 1e-300;

/// Residual sums of squares this small relative to the total count as a
/// saturated fit.
const PERFECT_FIT_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FStatistic {
    Finite(f64),
    Infinite,
}

impl FStatistic {
    pub fn value(self) -> f64 {
        match self {
            FStatistic::Finite(f) => f,
            FStatistic::Infinite => f64::INFINITY,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, FStatistic::Infinite)
    }
}

impl Serialize for FStatistic {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            FStatistic::Finite(f) => s.serialize_f64(*f),
            FStatistic::Infinite => s.serialize_str("+inf"),
        }
    }
}

impl<'de> Deserialize<'de> for FStatistic {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(f) => Ok(FStatistic::Finite(f)),
            Raw::Str(s) if s == "+inf" || s == "inf" => Ok(FStatistic::Infinite),
            Raw::Str(s) => Err(serde::de::Error::custom(format!("bad F statistic {s:?}"))),
        }
    }
}

/// Which variable was the response.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Design {
    /// score = intercept + slope · indicator
    ScoreOnIndicator,
    /// indicator = intercept + Σ coefficient · score (joint test over P scores)
    IndicatorOnScores,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionReport {
    pub design: Design,
    pub slope: f64,
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub r_squared: f64,
    pub pearson_r: f64,
    pub f_statistic: FStatistic,
    pub p_value: f64,
    pub df_model: usize,
    pub df_resid: usize,
    pub n: usize,
}

fn check_indicator(indicator: &[u8]) -> Result<()> {
    if let Some(i) = indicator.iter().position(|&v| v > 1) {
        return Err(Error::invalid(format!(
            "indicator value at row {} is {}, expected 0 or 1",
            i + 1,
            indicator[i]
        )));
    }
    let ones = indicator.iter().filter(|&&v| v == 1).count();
    if ones == 0 || ones == indicator.len() {
        return Err(Error::Degenerate(
            "indicator is constant; it needs both 0 and 1 values".into(),
        ));
    }
    Ok(())
}

fn f_and_p(ss_tot: f64, ss_res: f64, df_model: usize, df_resid: usize) -> (f64, FStatistic, f64) {
    if ss_res <= PERFECT_FIT_RTOL * ss_tot {
        return (1.0, FStatistic::Infinite, 0.0);
    }
    let r2 = (1.0 - ss_res / ss_tot).clamp(0.0, 1.0);
    let f = ((ss_tot - ss_res) / df_model as f64).max(0.0) / (ss_res / df_resid as f64);
    let mut p = f_sf(f, df_model as u64, df_resid as u64);
    if p < P_VALUE_FLOOR {
        p = 0.0;
    }
    (r2, FStatistic::Finite(f), p)
}

/// Simple regression of `scores` on a 0/1 indicator, with intercept.
pub fn regress_indicator(scores: &[f64], indicator: &[u8]) -> Result<RegressionReport> {
    let n = scores.len();
    if indicator.len() != n {
        return Err(Error::RowCountMismatch {
            expected: n,
            found: indicator.len(),
        });
    }
    if n < 3 {
        return Err(Error::InsufficientRows {
            what: "regression".into(),
            needed: 3,
            available: n,
        });
    }
    if let Some(i) = scores.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite { row: i + 1, col: 0 });
    }
    check_indicator(indicator)?;

    let x: Vec<f64> = indicator.iter().map(|&v| f64::from(v)).collect();
    let nf = n as f64;
    let xbar = x.iter().sum::<f64>() / nf;
    let ybar = scores.iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (&xi, &yi) in x.iter().zip(scores) {
        let (dx, dy) = (xi - xbar, yi - ybar);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if syy == 0.0 {
        return Err(Error::Degenerate("scores are constant (zero total sum of squares)".into()));
    }
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let ss_res: f64 = x
        .iter()
        .zip(scores)
        .map(|(&xi, &yi)| (yi - intercept - slope * xi).powi(2))
        .sum();
    let (df_model, df_resid) = (1, n - 2);
    let (r_squared, f_statistic, p_value) = f_and_p(syy, ss_res, df_model, df_resid);
    Ok(RegressionReport {
        design: Design::ScoreOnIndicator,
        slope,
        intercept,
        coefficients: vec![slope],
        r_squared,
        pearson_r: sxy / (sxx * syy).sqrt(),
        f_statistic,
        p_value,
        df_model,
        df_resid,
        n,
    })
}

/// Regression of a 0/1 indicator on P score columns plus intercept.
///
/// R² is the squared multiple correlation, i.e. how much of the indicator the
/// best linear combination of the scores explains; the F test is the joint
/// hypothesis that all P coefficients vanish.
pub fn regress_multi(scores: &Dense, indicator: &[u8]) -> Result<RegressionReport> {
    let (n, p) = (scores.rows(), scores.cols());
    if indicator.len() != n {
        return Err(Error::RowCountMismatch {
            expected: n,
            found: indicator.len(),
        });
    }
    if p == 0 {
        return Err(Error::invalid("no score columns given"));
    }
    if n <= p + 1 {
        return Err(Error::InsufficientRows {
            what: format!("regression on {p} score columns"),
            needed: p + 2,
            available: n,
        });
    }
    if let Some((r, c)) = scores.first_non_finite() {
        return Err(Error::NonFinite { row: r + 1, col: c });
    }
    check_indicator(indicator)?;

    let y: Vec<f64> = indicator.iter().map(|&v| f64::from(v)).collect();
    let ybar = y.iter().sum::<f64>() / n as f64;
    let xbar = scores.column_means();
    let mut xc = nalgebra::DMatrix::<f64>::zeros(n, p);
    for i in 0..n {
        for j in 0..p {
            xc[(i, j)] = scores.get(i, j) - xbar[j];
        }
    }
    let yc = nalgebra::DVector::from_iterator(n, y.iter().map(|v| v - ybar));

    let qr = xc.clone().qr();
    let r = qr.r();
    let diag_max = (0..p).map(|j| r[(j, j)].abs()).fold(0.0, f64::max);
    if diag_max == 0.0 || (0..p).any(|j| r[(j, j)].abs() <= 1e-10 * diag_max) {
        return Err(Error::Degenerate("design matrix is rank deficient".into()));
    }
    let qty = qr.q().transpose() * &yc;
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::Degenerate("design matrix is rank deficient".into()))?;

    let fitted = &xc * &beta;
    let ss_res: f64 = yc.iter().zip(fitted.iter()).map(|(a, b)| (a - b).powi(2)).sum();
    let ss_tot: f64 = yc.iter().map(|v| v * v).sum();
    let coefficients: Vec<f64> = beta.iter().copied().collect();
    let intercept = ybar - coefficients.iter().zip(&xbar).map(|(b, m)| b * m).sum::<f64>();
    let (df_model, df_resid) = (p, n - p - 1);
    let (r_squared, f_statistic, p_value) = f_and_p(ss_tot, ss_res, df_model, df_resid);
    let pearson_r = if p == 1 {
        let sxy: f64 = xc.column(0).iter().zip(yc.iter()).map(|(a, b)| a * b).sum();
        let sxx: f64 = xc.column(0).iter().map(|a| a * a).sum();
        sxy / (sxx * ss_tot).sqrt()
    } else {
        r_squared.sqrt()
    };
    Ok(RegressionReport {
        design: Design::IndicatorOnScores,
        slope: coefficients[0],
        intercept,
        coefficients,
        r_squared,
        pearson_r,
        f_statistic,
        p_value,
        df_model,
        df_resid,
        n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn worked_example() {
        let r = regress_indicator(&[0.0, 1.0, 1.0, 2.0], &[0, 0, 1, 1]).unwrap();
        assert!((r.slope - 1.0).abs() < 1e-12);
        assert!((r.intercept - 0.5).abs() < 1e-12);
        assert!((r.r_squared - 0.5).abs() < 1e-12);
        assert!((r.f_statistic.value() - 2.0).abs() < 1e-12);
        assert_eq!((r.df_model, r.df_resid, r.n), (1, 2, 4));
        assert_eq!(r.df_model + r.df_resid + 1, r.n);
        assert!((r.pearson_r.powi(2) - r.r_squared).abs() < 1e-10);
        // F(1,2) survival at 2: 1 - sqrt(2/4) = 1 - 1/sqrt(2)
        assert!((r.p_value - (1.0 - std::f64::consts::FRAC_1_SQRT_2)).abs() < 1e-12);
    }

    #[test]
    fn perfect_fit_is_flagged() {
        let r = regress_indicator(&[0.0, 0.0, 1.0, 1.0, 1.0], &[0, 0, 1, 1, 1]).unwrap();
        assert_eq!(r.r_squared, 1.0);
        assert!(r.f_statistic.is_infinite());
        assert_eq!(r.p_value, 0.0);
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"f_statistic\":\"+inf\""));
        let back: RegressionReport = serde_json::from_str(&json).unwrap();
        assert!(back.f_statistic.is_infinite());
    }

    #[test]
    fn independent_scores_explain_nothing() {
        let r = regress_indicator(&[1.0, 2.0, 1.0, 2.0], &[0, 0, 1, 1]).unwrap();
        assert!(r.slope.abs() < 1e-15);
        assert!(r.r_squared.abs() < 1e-15);
        assert!((r.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(
            regress_indicator(&[1.0, 2.0, 3.0], &[1, 1, 1]),
            Err(Error::Degenerate(_))
        ));
        assert!(matches!(
            regress_indicator(&[2.0, 2.0, 2.0], &[0, 1, 1]),
            Err(Error::Degenerate(_))
        ));
        assert!(regress_indicator(&[1.0, 2.0], &[0, 1]).is_err());
        assert!(regress_indicator(&[1.0, 2.0, 3.0], &[0, 2, 1]).is_err());
    }

    #[test]
    fn multi_with_one_column_matches_simple() {
        let scores = [0.3, -1.2, 2.2, 0.9, 1.7, -0.4, 0.0, 2.5];
        let ind = [0, 0, 1, 0, 1, 0, 1, 1];
        let simple = regress_indicator(&scores, &ind).unwrap();
        let d = Dense::from_row_major(8, 1, scores.to_vec()).unwrap();
        let multi = regress_multi(&d, &ind).unwrap();
        assert!((simple.r_squared - multi.r_squared).abs() < 1e-12);
        assert!((simple.pearson_r - multi.pearson_r).abs() < 1e-12);
        assert_eq!(multi.design, Design::IndicatorOnScores);
    }

    #[test]
    fn multi_separable_combination() {
        // indicator = 1 exactly when a + b > 0 and the relation is linear
        let rows = [[1.0, 0.0], [0.0, 1.0], [2.0, -1.0], [3.0, -3.0], [-1.0, 2.0], [0.5, 0.5]];
        // indicator = a + b on these rows, which is 0 or 1
        let ind: Vec<u8> = rows.iter().map(|r| (r[0] + r[1]) as u8).collect();
        assert_eq!(ind, vec![1, 1, 1, 0, 1, 1]);
        let d = Dense::from_rows(&rows).unwrap();
        let r = regress_multi(&d, &ind).unwrap();
        assert!((r.r_squared - 1.0).abs() < 1e-12);
        assert!(r.f_statistic.is_infinite());
    }

    #[test]
    fn multi_rank_deficient() {
        let rows = [[1.0, 2.0], [2.0, 4.0], [3.0, 6.0], [4.0, 8.0]];
        let d = Dense::from_rows(&rows).unwrap();
        assert!(matches!(regress_multi(&d, &[0, 1, 0, 1]), Err(Error::Degenerate(_))));
        assert!(regress_multi(&d.select_rows(&[0, 1, 2]), &[0, 1, 0]).is_err());
    }

    proptest! {
        #[test]
        fn affine_invariance(
            scores in prop::collection::vec(-10.0f64..10.0, 6..30),
            a in prop::sample::select(vec![-3.0, -0.5, 0.25, 2.0, 7.0]),
            b in -5.0f64..5.0,
            bits in any::<u64>(),
        ) {
            let n = scores.len();
            let mut ind: Vec<u8> = (0..n).map(|i| ((bits >> (i % 64)) & 1) as u8).collect();
            ind[0] = 0;
            ind[1] = 1;
            let base = regress_indicator(&scores, &ind);
            prop_assume!(base.is_ok());
            let base = base.unwrap();
            prop_assume!(!base.f_statistic.is_infinite());
            let moved: Vec<f64> = scores.iter().map(|s| a * s + b).collect();
            let r = regress_indicator(&moved, &ind).unwrap();
            prop_assert!((r.r_squared - base.r_squared).abs() < 1e-9);
            prop_assert!((r.pearson_r.abs() - base.pearson_r.abs()).abs() < 1e-9);
            prop_assert!((r.slope - a * base.slope).abs() < 1e-8 * (1.0 + base.slope.abs() * a.abs()));
            let (f0, f1) = (base.f_statistic.value(), r.f_statistic.value());
            prop_assert!((f0 - f1).abs() <= 1e-6 * f0.max(1.0));
            prop_assert!((r.p_value - base.p_value).abs() < 1e-8);
            // sign agreement
            if base.slope.abs() > 1e-9 {
                prop_assert_eq!(base.slope > 0.0, base.pearson_r > 0.0);
            }
            prop_assert!((0.0..=1.0).contains(&r.p_value));
        }
    }

    #[test]
    fn r_squared_grows_with_separation() {
        // two clusters at ±delta sharing one noise pattern
        let noise = [0.3, 0.3, -0.7, -0.7, 0.1, 0.1, 0.9, 0.9, -0.2, -0.2];
        let ind: Vec<u8> = (0..10).map(|i| (i % 2) as u8).collect();
        let mut prev = -1.0;
        for step in 1..12 {
            let delta = step as f64 * 0.25;
            let s: Vec<f64> = noise
                .iter()
                .zip(&ind)
                .map(|(e, &c)| if c == 1 { delta + e } else { -delta + e })
                .collect();
            let r2 = regress_indicator(&s, &ind).unwrap().r_squared;
            assert!(r2 > prev, "delta {delta}: {r2} <= {prev}");
            prev = r2;
        }
    }
}
