//! Linear least squares with an optional ridge penalty.
//!
//! Solved as an augmented least-squares problem `[1 X; 0 √λ I] B ≈ [Y; 0]`,
//! which leaves the intercept unpenalised and needs no normal equations.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::LeastSquares;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RidgeParams {
    /// Penalty on the standardised coefficients; 0 gives ordinary least squares.
    pub lambda: f64,
}

impl Default for RidgeParams {
    fn default() -> Self {
        Self { lambda: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ridge {
    /// d × N; rows of inactive inputs are zero.
    pub coef: DMatrix<f64>,
    pub intercept: DVector<f64>,
}

impl Ridge {
    /// Fits `y ≈ 1 b + x B` using only the `active` input columns.
    pub fn fit(x: &DMatrix<f64>, y: &DMatrix<f64>, active: &[bool], params: &RidgeParams) -> Result<Self> {
        if !(params.lambda >= 0.0 && params.lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!("ridge penalty must be ≥ 0, got {}", params.lambda)));
        }
        let (t, d) = x.shape();
        let cols: Vec<usize> = (0..d).filter(|&j| active[j]).collect();
        let k = cols.len();
        let extra = if params.lambda > 0.0 { k } else { 0 };
        let root = params.lambda.sqrt();
        let design = DMatrix::from_fn(t + extra, 1 + k, |i, j| {
            if i < t {
                if j == 0 {
                    1.0
                } else {
                    x[(i, cols[j - 1])]
                }
            } else if j == i - t + 1 {
                root
            } else {
                0.0
            }
        });
        let response = DMatrix::from_fn(t + extra, y.ncols(), |i, j| if i < t { y[(i, j)] } else { 0.0 });
        let ls = LeastSquares::fit(&design, &response, |j| {
            if j == 0 {
                "intercept".into()
            } else {
                format!("input {}", cols[j - 1])
            }
        })?;
        let mut coef = DMatrix::zeros(d, y.ncols());
        for (r, &j) in cols.iter().enumerate() {
            coef.set_row(j, &ls.coef.row(r + 1));
        }
        let intercept = ls.coef.row(0).transpose();
        Ok(Self { coef, intercept })
    }

    pub fn predict(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.intercept + self.coef.tr_mul(x)
    }
}
