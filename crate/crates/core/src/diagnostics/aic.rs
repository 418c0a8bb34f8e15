//! Lag-order selection by the Akaike information criterion.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ingest::MetricFrame;
use crate::linalg::log_det_spd;
use crate::varmodel::{fit_var, residual_covariance, VarModel};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AicScan {
    /// AIC(p) for p = 1..=p_max; `+∞` where the fit was singular.
    pub values: Vec<f64>,
    pub best_p: usize,
}

impl AicScan {
    pub fn p_max(&self) -> usize {
        self.values.len()
    }

    /// Lags ordered by increasing AIC (ties to the smaller lag).
    pub fn ranked(&self) -> Vec<usize> {
        let mut lags: Vec<usize> = (1..=self.values.len()).collect();
        lags.sort_by(|&a, &b| self.values[a - 1].total_cmp(&self.values[b - 1]).then(a.cmp(&b)));
        lags
    }
}

/// `log|Σ̃_ε| + 2pN²/T` with T the number of residuals and
/// `Σ̃_ε = (1/T) Σ ε̂_t ε̂_tᵀ`; `+∞` when Σ̃_ε is not positive definite.
pub fn aic_value(model: &VarModel) -> f64 {
    let n = model.n_vars() as f64;
    let t = model.residuals().ncols();
    if t == 0 {
        return f64::INFINITY;
    }
    match log_det_spd(&residual_covariance(model.residuals(), t)) {
        Some(ld) => ld + 2.0 * model.p() as f64 * n * n / t as f64,
        None => f64::INFINITY,
    }
}

/// AIC for p = 1..=p_max. Every order is estimated on the same sample,
/// t = p_max..L, so the criteria differ only through fit and penalty.
pub fn aic_scan(frame: &MetricFrame, p_max: usize) -> Result<AicScan> {
    if p_max == 0 {
        return Err(Error::InvalidParameter("p_max must be at least 1".into()));
    }
    let (n, l) = (frame.n_vars(), frame.len());
    if l <= n * p_max + 1 + p_max {
        return Err(Error::InsufficientData { needed: n * p_max + 2 + p_max, got: l });
    }
    let mut values = Vec::with_capacity(p_max);
    for p in 1..=p_max {
        let v = match frame.slice(p_max - p, l).and_then(|f| fit_var(&f, p)) {
            Ok(model) => aic_value(&model),
            Err(e) if e.is_numerical() => f64::INFINITY,
            Err(e) => return Err(e),
        };
        values.push(v);
    }
    if values.iter().all(|v| !v.is_finite()) {
        return Err(Error::Numerical("every lag order produced a singular fit".into()));
    }
    let mut best_p = 1;
    for (i, &v) in values.iter().enumerate() {
        if v < values[best_p - 1] {
            best_p = i + 1;
        }
    }
    Ok(AicScan { values, best_p })
}
