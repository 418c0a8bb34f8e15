//! Residual autocorrelation tests: Breusch-Godfrey LM and Edgerton-Shukur F.
//!
//! Both tests share the auxiliary regression of the VAR residuals on the
//! original regressors plus ξ lagged residuals (zero before the sample).

use nalgebra::DMatrix;

use super::dist::{tail_probability, Distribution};
use super::{DegreesOfFreedom, TestResult, ALPHA};
use crate::error::{Error, Result};
use crate::linalg::{log_det_spd, LeastSquares};
use crate::varmodel::{lagged_design, regressor_label, residual_covariance, VarModel};

/// LM and ES outcomes for one residual lag ξ.
#[derive(Debug, Clone, PartialEq)]
pub struct SerialOutcome {
    pub xi: usize,
    pub lm: TestResult,
    pub es: TestResult,
}

/// `Σ̃_v` of the auxiliary regression with ξ lagged residuals.
fn auxiliary_covariance(model: &VarModel, xi: usize) -> Result<DMatrix<f64>> {
    let (n, p) = (model.n_vars(), model.p());
    let resid = model.residuals();
    let t = resid.ncols();
    let (base, _) = lagged_design(model.sample(), p);
    let k0 = base.ncols();
    let k = k0 + n * xi;
    if t <= k {
        return Err(Error::InsufficientData { needed: k + 1 + p, got: model.sample().ncols() });
    }
    let x = DMatrix::from_fn(t, k, |row, col| {
        if col < k0 {
            base[(row, col)]
        } else {
            let lag = (col - k0) / n + 1;
            let var = (col - k0) % n;
            if row >= lag {
                resid[(var, row - lag)]
            } else {
                0.0
            }
        }
    });
    let y = resid.transpose();
    let names = model.names();
    let ls = LeastSquares::fit(&x, &y, |j| {
        if j < k0 {
            regressor_label(names, j)
        } else {
            format!("residual {} (lag {})", names[(j - k0) % n], (j - k0) / n + 1)
        }
    })?;
    Ok(residual_covariance(&ls.resid.transpose(), model.n_obs()))
}

fn check_model(model: &VarModel, h: usize) -> Result<()> {
    if h == 0 {
        return Err(Error::InvalidParameter("error-model lag h must be at least 1".into()));
    }
    if !model.has_residuals() {
        return Err(Error::InvalidParameter("serial-correlation tests need a model with residuals".into()));
    }
    Ok(())
}

fn lm_outcome(model: &VarModel, sigma_v: &DMatrix<f64>, xi: usize) -> Result<TestResult> {
    let n = model.n_vars();
    let l = model.n_obs() as f64;
    let inv = model
        .sigma()
        .clone()
        .cholesky()
        .ok_or(Error::NotPositiveDefinite { index: 0 })?
        .inverse();
    let trace = (inv * sigma_v).trace();
    let stat = l * (n as f64 - trace);
    let k = (xi * n * n) as f64;
    let p = tail_probability(Distribution::ChiSquare { k }, stat)?;
    Ok(TestResult::new(stat, p, DegreesOfFreedom::ChiSquare { k }, ALPHA))
}

fn es_outcome(model: &VarModel, sigma_v: &DMatrix<f64>, xi: usize) -> Result<TestResult> {
    let n = model.n_vars() as f64;
    let l = model.n_obs() as f64;
    let h = xi as f64;
    let m = n * h;
    let ld_e = log_det_spd(model.sigma()).ok_or(Error::NotPositiveDefinite { index: 0 })?;
    let ld_v = log_det_spd(sigma_v).ok_or(Error::NotPositiveDefinite { index: 0 })?;
    let denom = n * n + m * m - 5.0;
    let r = if denom > 0.0 { ((n * n * m * m - 4.0) / denom).sqrt() } else { 1.0 };
    let q = n * m / 2.0 - 1.0;
    let beta = l - n * (1.0 + h) + 0.5 * (n * (h - 1.0) - 1.0);
    let df1 = h * n * n;
    let df2 = beta * r - q;
    if !(df2 > 0.0) {
        return Err(Error::InsufficientData { needed: model.n_obs() + 1, got: model.n_obs() });
    }
    let stat = ((-(ld_v - ld_e) / r).exp() - 1.0) * df2 / df1;
    let p = tail_probability(Distribution::F { m: df1, l: df2 }, stat)?;
    Ok(TestResult::new(stat, p, DegreesOfFreedom::F { m: df1, l: df2 }, ALPHA))
}

/// LM and ES tests for ξ = 1..=h, sharing one auxiliary fit per ξ.
pub fn serial_tests(model: &VarModel, h: usize) -> Result<Vec<SerialOutcome>> {
    check_model(model, h)?;
    (1..=h)
        .map(|xi| {
            let sigma_v = auxiliary_covariance(model, xi)?;
            Ok(SerialOutcome { xi, lm: lm_outcome(model, &sigma_v, xi)?, es: es_outcome(model, &sigma_v, xi)? })
        })
        .collect()
}

/// Breusch-Godfrey LM test, `Q = L (N − tr(Σ̃_ε⁻¹ Σ̃_v))` against χ²(ξN²).
pub fn lm_test(model: &VarModel, h: usize) -> Result<Vec<TestResult>> {
    check_model(model, h)?;
    (1..=h).map(|xi| lm_outcome(model, &auxiliary_covariance(model, xi)?, xi)).collect()
}

/// Edgerton-Shukur F test (Rao's F approximation to the LR statistic).
pub fn es_test(model: &VarModel, h: usize) -> Result<Vec<TestResult>> {
    check_model(model, h)?;
    (1..=h).map(|xi| es_outcome(model, &auxiliary_covariance(model, xi)?, xi)).collect()
}
