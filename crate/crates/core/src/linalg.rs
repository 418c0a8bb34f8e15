//! Small dense linear-algebra helpers shared by the estimators.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Relative threshold on |R_jj| / max|R_ii| below which a regressor column is
/// treated as linearly dependent on the others.
const RANK_TOL: f64 = 1e-10;

/// Multi-response least-squares fit `Y ≈ X B` solved through a Householder QR
/// of `X`; the normal equations are never formed.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    /// k × m coefficient matrix, one column per response.
    pub coef: DMatrix<f64>,
    /// T × m residual matrix.
    pub resid: DMatrix<f64>,
    r: DMatrix<f64>,
}

impl LeastSquares {
    /// Fits all responses in `y` against the shared regressors `x`.
    ///
    /// `label` names regressor column `j` for the singularity error.
    pub fn fit(x: &DMatrix<f64>, y: &DMatrix<f64>, label: impl Fn(usize) -> String) -> Result<Self> {
        let (t, k) = x.shape();
        if y.nrows() != t {
            return Err(Error::LengthMismatch { left: t, right: y.nrows() });
        }
        if t < k {
            return Err(Error::InsufficientData { needed: k, got: t });
        }
        let qr = x.clone().qr();
        let r = qr.r();
        let scale = (0..k).map(|j| r[(j, j)].abs()).fold(0.0, f64::max);
        if let Some(j) = (0..k).find(|&j| !(r[(j, j)].abs() > RANK_TOL * scale)) {
            return Err(Error::Singular { variable: label(j) });
        }
        let mut qty = y.clone();
        qr.q_tr_mul(&mut qty);
        let head = qty.rows(0, k).into_owned();
        let coef = r
            .solve_upper_triangular(&head)
            .ok_or_else(|| Error::Numerical("triangular solve failed".into()))?;
        let resid = y - x * &coef;
        Ok(Self { coef, resid, r })
    }

    /// Diagonal of `(XᵀX)⁻¹`, computed from the triangular factor.
    pub fn xtx_inv_diag(&self) -> Vec<f64> {
        let k = self.r.nrows();
        let rinv = self
            .r
            .clone()
            .try_inverse()
            .unwrap_or_else(|| DMatrix::from_element(k, k, f64::NAN));
        (0..k).map(|j| rinv.row(j).norm_squared()).collect()
    }
}

/// Log-determinant of a symmetric positive-definite matrix, `None` otherwise.
pub fn log_det_spd(m: &DMatrix<f64>) -> Option<f64> {
    let chol = m.clone().cholesky()?;
    let l = chol.l();
    let mut acc = 0.0;
    for i in 0..l.nrows() {
        acc += l[(i, i)].ln();
    }
    Some(2.0 * acc)
}

/// Arithmetic mean of a slice; 0 for an empty slice.
pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// Population standard deviation.
pub fn std_pop(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len().max(1) as f64).sqrt()
}
