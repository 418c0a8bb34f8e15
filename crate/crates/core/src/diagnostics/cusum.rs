//! OLS-CUSUM structural-break test on VAR residuals.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::varmodel::VarModel;

/// 95% crossing level of the supremum of a Brownian bridge.
pub const CUSUM_BOUNDARY: f64 = 1.358;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CusumPath {
    pub variable: String,
    /// T + 1 points at normalised times k/T, k = 0..=T; starts at 0.
    pub path: Vec<f64>,
    pub boundary: f64,
    pub crossed: bool,
    pub max_excursion: f64,
}

impl CusumPath {
    /// Normalised time of each path point.
    pub fn times(&self) -> Vec<f64> {
        let t = (self.path.len() - 1).max(1) as f64;
        (0..self.path.len()).map(|k| k as f64 / t).collect()
    }
}

/// Paths for each row of an N × T residual matrix. A row of exact zeros gives
/// a flat zero path.
pub fn cusum_paths(resid: &DMatrix<f64>, names: &[String]) -> Result<Vec<CusumPath>> {
    let (n, t) = resid.shape();
    if names.len() != n {
        return Err(Error::LengthMismatch { left: names.len(), right: n });
    }
    if t == 0 {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let root_t = (t as f64).sqrt();
    (0..n)
        .map(|i| {
            let row = resid.row(i);
            let sigma = (row.norm_squared() / t as f64).sqrt();
            if !sigma.is_finite() {
                return Err(Error::Numerical(format!("non-finite residuals for `{}`", names[i])));
            }
            let mut path = Vec::with_capacity(t + 1);
            path.push(0.0);
            let mut acc = 0.0;
            for &e in row.iter() {
                acc += e;
                path.push(if sigma > 0.0 { acc / (sigma * root_t) } else { 0.0 });
            }
            let max_excursion = path.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            Ok(CusumPath {
                variable: names[i].clone(),
                path,
                boundary: CUSUM_BOUNDARY,
                crossed: max_excursion > CUSUM_BOUNDARY,
                max_excursion,
            })
        })
        .collect()
}

pub fn cusum_test(model: &VarModel) -> Result<Vec<CusumPath>> {
    if !model.has_residuals() {
        return Err(Error::InvalidParameter("CUSUM needs a model with residuals".into()));
    }
    cusum_paths(model.residuals(), model.names())
}
