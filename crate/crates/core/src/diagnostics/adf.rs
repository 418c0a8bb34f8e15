//! Augmented Dickey-Fuller unit-root test.
//!
//! Regresses Δy_t on the deterministic terms, y_{t−1} and p lagged
//! differences; the statistic is the t-ratio of the y_{t−1} coefficient θ.
//! Approximate p-values come from MacKinnon's (1994) normal-CDF response
//! surface for a single series; critical values from MacKinnon (2010).

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::Serialize;

use super::dist::normal_cdf;
use super::{DegreesOfFreedom, TestResult, ALPHA};
use crate::error::{Error, Result};
use crate::linalg::LeastSquares;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AdfSpec {
    #[default]
    Constant,
    ConstantTrend,
}

impl FromStr for AdfSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "c" | "constant" => Ok(Self::Constant),
            "ct" | "constant+trend" | "constant-trend" => Ok(Self::ConstantTrend),
            other => Err(Error::InvalidParameter(format!("unknown ADF specification `{other}`"))),
        }
    }
}

impl fmt::Display for AdfSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Constant => "c",
            Self::ConstantTrend => "ct",
        })
    }
}

struct Surface {
    tau_max: f64,
    tau_min: f64,
    tau_star: f64,
    small_p: [f64; 3],
    large_p: [f64; 4],
    /// 1%, 5%, 10% rows of `c0 + c1/n + c2/n² + c3/n³`.
    crit: [[f64; 4]; 3],
}

const SURFACE_C: Surface = Surface {
    tau_max: 2.74,
    tau_min: -18.83,
    tau_star: -1.61,
    small_p: [2.1659, 1.4412, 0.038269],
    large_p: [1.7339, 0.93202, -0.12745, -0.010368],
    crit: [
        [-3.43035, -6.5393, -16.786, -79.433],
        [-2.86154, -2.8903, -4.234, -40.040],
        [-2.56677, -1.5384, -2.809, 0.0],
    ],
};

const SURFACE_CT: Surface = Surface {
    tau_max: 0.7,
    tau_min: -16.18,
    tau_star: -2.89,
    small_p: [3.2512, 1.6047, 0.049588],
    large_p: [2.5261, 0.61654, -0.37956, -0.060285],
    crit: [
        [-3.95877, -9.0531, -28.428, -134.155],
        [-3.41049, -4.3904, -9.036, -45.374],
        [-3.12705, -2.5856, -3.925, -22.380],
    ],
};

fn surface(spec: AdfSpec) -> &'static Surface {
    match spec {
        AdfSpec::Constant => &SURFACE_C,
        AdfSpec::ConstantTrend => &SURFACE_CT,
    }
}

fn poly(coef: &[f64], x: f64) -> f64 {
    coef.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// Approximate left-tail p-value of a Dickey-Fuller τ statistic.
pub fn adf_p_value(tau: f64, spec: AdfSpec) -> f64 {
    let s = surface(spec);
    if tau > s.tau_max {
        1.0
    } else if tau < s.tau_min {
        0.0
    } else if tau <= s.tau_star {
        normal_cdf(poly(&s.small_p, tau))
    } else {
        normal_cdf(poly(&s.large_p, tau.min(large_p_peak(s))))
    }
}

/// Stationary point of the cubic large-p polynomial; the constant+trend
/// surface turns down just before its upper cutoff, so it is held flat there.
fn large_p_peak(s: &Surface) -> f64 {
    let [_, b1, b2, b3] = s.large_p;
    let (a, b, c) = (3.0 * b3, 2.0 * b2, b1);
    let disc = (b * b - 4.0 * a * c).max(0.0).sqrt();
    let roots = [(-b + disc) / (2.0 * a), (-b - disc) / (2.0 * a)];
    roots
        .into_iter()
        .filter(|r| *r > s.tau_star && *r <= s.tau_max && 2.0 * a * r + b < 0.0)
        .fold(s.tau_max, f64::min)
}

/// 1%, 5% and 10% critical values for `nobs` regression observations.
pub fn adf_critical_values(nobs: usize, spec: AdfSpec) -> [f64; 3] {
    let inv = 1.0 / nobs as f64;
    surface(spec).crit.map(|row| poly(&row, inv))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdfResult {
    #[serde(flatten)]
    pub test: TestResult,
    pub lags: usize,
    pub spec: AdfSpec,
    pub nobs: usize,
    /// 1%, 5%, 10%.
    pub critical_values: [f64; 3],
}

pub fn adf_test(series: &[f64], lags: usize, spec: AdfSpec) -> Result<AdfResult> {
    let n = series.len();
    if n <= lags + 10 {
        return Err(Error::InsufficientData { needed: lags + 11, got: n });
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("series contains non-finite values".into()));
    }
    let first = series[0];
    if series.iter().all(|&v| v == first) {
        return Err(Error::ZeroVariance("series".into()));
    }
    let diff: Vec<f64> = series.windows(2).map(|w| w[1] - w[0]).collect();
    let nobs = n - 1 - lags;
    let det = match spec {
        AdfSpec::Constant => 1,
        AdfSpec::ConstantTrend => 2,
    };
    let k = det + 1 + lags;
    if nobs <= k {
        return Err(Error::InsufficientData { needed: n + k + 1 - nobs, got: n });
    }
    // Row r models Δy at diff index lags + r, i.e. time t = lags + r + 1.
    let x = DMatrix::from_fn(nobs, k, |r, c| {
        let t = lags + r + 1;
        match (c, spec) {
            (0, _) => 1.0,
            (1, AdfSpec::ConstantTrend) => (r + 1) as f64,
            _ if c == det => series[t - 1],
            _ => diff[t - 1 - (c - det)],
        }
    });
    let y = DMatrix::from_fn(nobs, 1, |r, _| diff[lags + r]);
    let label = |c: usize| match (c, spec) {
        (0, _) => "constant".to_string(),
        (1, AdfSpec::ConstantTrend) => "trend".to_string(),
        _ if c == det => "level (lag 1)".to_string(),
        _ => format!("difference (lag {})", c - det),
    };
    let ls = LeastSquares::fit(&x, &y, label)?;
    let rss = ls.resid.norm_squared();
    let s2 = rss / (nobs - k) as f64;
    let se = (s2 * ls.xtx_inv_diag()[det]).sqrt();
    if !(se > 0.0) {
        return Err(Error::ZeroVariance("ADF regression residuals".into()));
    }
    let tau = ls.coef[(det, 0)] / se;
    let p = adf_p_value(tau, spec);
    Ok(AdfResult {
        test: TestResult::new(tau, p, DegreesOfFreedom::DickeyFuller { nobs, lags }, ALPHA),
        lags,
        spec,
        nobs,
        critical_values: adf_critical_values(nobs, spec),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn ar1(phi: f64, len: usize, seed: u64) -> Vec<f64> {
        let mut rng = substream(seed, "adf-test", 0);
        let mut y = vec![0.0; len];
        for t in 1..len {
            y[t] = phi * y[t - 1] + rng.sample::<f64, _>(StandardNormal);
        }
        y
    }

    #[test]
    fn p_value_surface_reference_points() {
        // Reference points on the constant-only surface.
        assert_abs_diff_eq!(adf_p_value(-3.445, AdfSpec::Constant), 9.501e-3, epsilon = 2e-5);
        assert!(adf_p_value(-7.974, AdfSpec::Constant) < 1e-10);
        // 5% critical value of the asymptotic distribution maps to ≈ 0.05.
        assert_abs_diff_eq!(adf_p_value(-2.8615, AdfSpec::Constant), 0.05, epsilon = 2e-3);
        assert_abs_diff_eq!(adf_p_value(-3.4105, AdfSpec::ConstantTrend), 0.05, epsilon = 2e-3);
        assert_eq!(adf_p_value(3.0, AdfSpec::Constant), 1.0);
        assert_eq!(adf_p_value(-20.0, AdfSpec::Constant), 0.0);
    }

    #[test]
    fn p_value_is_monotone_in_tau() {
        for spec in [AdfSpec::Constant, AdfSpec::ConstantTrend] {
            let mut prev = 0.0;
            for i in 0..=4000 {
                let tau = -20.0 + i as f64 * 0.006;
                let p = adf_p_value(tau, spec);
                assert!(p >= prev - 1e-12, "{spec} at {tau}");
                prev = p;
            }
        }
    }

    #[test]
    fn critical_values_approach_asymptotic() {
        let cv = adf_critical_values(1_000_000, AdfSpec::Constant);
        assert_abs_diff_eq!(cv[1], -2.86154, epsilon = 1e-4);
        let small = adf_critical_values(100, AdfSpec::ConstantTrend);
        assert!(small[0] < small[1] && small[1] < small[2]);
    }

    #[test]
    fn stationary_series_rejects_random_walk_does_not() {
        let stat = adf_test(&ar1(0.5, 2000, 1), 1, AdfSpec::Constant).unwrap();
        assert!(stat.test.reject);
        let rw = adf_test(&ar1(1.0, 2000, 1), 1, AdfSpec::Constant).unwrap();
        assert!(!rw.test.reject, "{:?}", rw.test);
    }

    #[test]
    fn zero_lag_matches_direct_t_ratio() {
        let y = ar1(0.8, 200, 4);
        let r = adf_test(&y, 0, AdfSpec::Constant).unwrap();
        // Simple regression of Δy on y_{t−1} with intercept, textbook formulas.
        let xs: Vec<f64> = y[..199].to_vec();
        let ys: Vec<f64> = y.windows(2).map(|w| w[1] - w[0]).collect();
        let mx = xs.iter().sum::<f64>() / 199.0;
        let my = ys.iter().sum::<f64>() / 199.0;
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let b = sxy / sxx;
        let a = my - b * mx;
        let rss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - a - b * x).powi(2)).sum();
        let se = (rss / 197.0 / sxx).sqrt();
        assert_abs_diff_eq!(r.test.statistic, b / se, epsilon = 1e-9);
        assert_eq!(r.nobs, 199);
    }

    #[test]
    fn constant_series_is_an_error() {
        assert!(matches!(adf_test(&[3.0; 50], 1, AdfSpec::Constant), Err(Error::ZeroVariance(_))));
        assert!(matches!(adf_test(&[1.0; 5], 1, AdfSpec::Constant), Err(Error::InsufficientData { .. })));
    }

    #[test]
    fn spec_parses() {
        assert_eq!("c".parse::<AdfSpec>().unwrap(), AdfSpec::Constant);
        assert_eq!("ct".parse::<AdfSpec>().unwrap(), AdfSpec::ConstantTrend);
        assert!("nc".parse::<AdfSpec>().is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn statistic_invariant_to_level_shift(seed in 0u64..500, shift in -1e3f64..1e3, lags in 0usize..4, trend in any::<bool>()) {
            let spec = if trend { AdfSpec::ConstantTrend } else { AdfSpec::Constant };
            let y = ar1(0.7, 150, seed);
            let shifted: Vec<f64> = y.iter().map(|v| v + shift).collect();
            let a = adf_test(&y, lags, spec).unwrap().test.statistic;
            let b = adf_test(&shifted, lags, spec).unwrap().test.statistic;
            prop_assert!((a - b).abs() <= 1e-6 * a.abs().max(1.0));
        }
    }
}
