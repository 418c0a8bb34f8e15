//! Upper-tail probabilities for the reference distributions of the tests.

use statrs::distribution::{ChiSquared, ContinuousCDF, FisherSnedecor, Normal};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Distribution {
    ChiSquare { k: f64 },
    F { m: f64, l: f64 },
}

/// `P(X > x)`; 1 for any `x ≤ 0`.
pub fn tail_probability(dist: Distribution, x: f64) -> Result<f64> {
    let bad_df = |what: &str| Error::InvalidParameter(format!("degrees of freedom must be positive: {what}"));
    if x.is_nan() {
        return Err(Error::Domain("statistic is NaN".into()));
    }
    let p = match dist {
        Distribution::ChiSquare { k } => {
            if !(k > 0.0 && k.is_finite()) {
                return Err(bad_df(&format!("k = {k}")));
            }
            if x <= 0.0 {
                return Ok(1.0);
            }
            ChiSquared::new(k).map_err(|e| Error::InvalidParameter(e.to_string()))?.sf(x)
        }
        Distribution::F { m, l } => {
            if !(m > 0.0 && l > 0.0 && m.is_finite() && l.is_finite()) {
                return Err(bad_df(&format!("F({m}, {l})")));
            }
            if x <= 0.0 {
                return Ok(1.0);
            }
            FisherSnedecor::new(m, l).map_err(|e| Error::InvalidParameter(e.to_string()))?.sf(x)
        }
    };
    Ok(p.clamp(0.0, 1.0))
}

pub(crate) fn normal_cdf(z: f64) -> f64 {
    Normal::standard().cdf(z)
}
