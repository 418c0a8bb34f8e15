//! VAR(p) estimation, companion-form stability and forecasting.
//!
//! The model is `y_t = c + Φ₁ y_{t−1} + … + Φ_p y_{t−p} + ε_t`. All N
//! equations share one regressor matrix, so a single QR factorisation solves
//! every equation at once.

use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{MetricFrame, SplitFrame};
use crate::linalg::LeastSquares;

/// Critical value of the standard normal used for the 95% forecast band.
pub const Z_95: f64 = 1.96;

/// A fitted VAR(p). Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct VarModel {
    names: Vec<String>,
    c: DVector<f64>,
    phi: Vec<DMatrix<f64>>,
    /// N × (L − p); empty when the model was loaded without data.
    residuals: DMatrix<f64>,
    /// N × L estimation sample; empty when loaded without data.
    sample: DMatrix<f64>,
    sigma: DMatrix<f64>,
    n_obs: usize,
}

/// Builds the regressor matrix `[1, y_{t−1}, …, y_{t−p}]` for t = p..L and the
/// matching response matrix.
pub(crate) fn lagged_design(data: &DMatrix<f64>, p: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let (n, l) = data.shape();
    let t = l - p;
    let x = DMatrix::from_fn(t, 1 + n * p, |row, col| {
        if col == 0 {
            1.0
        } else {
            let lag = (col - 1) / n + 1;
            let var = (col - 1) % n;
            data[(var, row + p - lag)]
        }
    });
    let y = DMatrix::from_fn(t, n, |row, var| data[(var, row + p)]);
    (x, y)
}

pub(crate) fn regressor_label(names: &[String], col: usize) -> String {
    if col == 0 {
        "intercept".into()
    } else {
        let n = names.len();
        format!("{} (lag {})", names[(col - 1) % n], (col - 1) / n + 1)
    }
}

/// Estimates a VAR(p) on `frame` by equation-wise OLS.
pub fn fit_var(frame: &MetricFrame, p: usize) -> Result<VarModel> {
    if p == 0 {
        return Err(Error::InvalidParameter("lag order must be at least 1".into()));
    }
    let (n, l) = (frame.n_vars(), frame.len());
    if l <= n * p + 1 {
        return Err(Error::InsufficientData { needed: n * p + 2, got: l });
    }
    let (x, y) = lagged_design(frame.data(), p);
    let ls = LeastSquares::fit(&x, &y, |j| regressor_label(frame.names(), j))?;
    let c = DVector::from_fn(n, |i, _| ls.coef[(0, i)]);
    let phi = (0..p)
        .map(|k| DMatrix::from_fn(n, n, |i, j| ls.coef[(1 + k * n + j, i)]))
        .collect();
    let residuals = ls.resid.transpose();
    let sigma = residual_covariance(&residuals, l);
    Ok(VarModel {
        names: frame.names().to_vec(),
        c,
        phi,
        residuals,
        sample: frame.data().clone(),
        sigma,
        n_obs: l,
    })
}

/// `(1/divisor) Σ ε̂_t ε̂_tᵀ`, symmetrised.
pub(crate) fn residual_covariance(resid: &DMatrix<f64>, divisor: usize) -> DMatrix<f64> {
    let s = resid * resid.transpose() / divisor as f64;
    (&s + s.transpose()) * 0.5
}

impl VarModel {
    /// Assembles a model from known coefficients (no residuals attached).
    pub fn from_parts(
        names: Vec<String>,
        c: Vec<f64>,
        phi: Vec<DMatrix<f64>>,
        sigma: DMatrix<f64>,
    ) -> Result<Self> {
        let n = c.len();
        if n == 0 || phi.is_empty() {
            return Err(Error::InvalidParameter("model needs N ≥ 1 and p ≥ 1".into()));
        }
        if names.len() != n || phi.iter().any(|m| m.shape() != (n, n)) || sigma.shape() != (n, n) {
            return Err(Error::InvalidParameter("inconsistent model dimensions".into()));
        }
        Ok(Self {
            names,
            c: DVector::from_vec(c),
            phi,
            residuals: DMatrix::zeros(n, 0),
            sample: DMatrix::zeros(n, 0),
            sigma,
            n_obs: 0,
        })
    }

    /// Re-evaluates residuals of these coefficients on `frame` (and the
    /// residual covariance from them), keeping the coefficients fixed.
    pub fn with_residuals_from(&self, frame: &MetricFrame) -> Result<Self> {
        let (n, p, l) = (self.n_vars(), self.p(), frame.len());
        if frame.n_vars() != n {
            return Err(Error::LengthMismatch { left: frame.n_vars(), right: n });
        }
        if l <= n * p + 1 {
            return Err(Error::InsufficientData { needed: n * p + 2, got: l });
        }
        let (x, y) = lagged_design(frame.data(), p);
        let resid = y - x * self.stacked_coefficients();
        let residuals = resid.transpose();
        let sigma = residual_covariance(&residuals, l);
        Ok(Self { residuals, sample: frame.data().clone(), sigma, n_obs: l, ..self.clone() })
    }

    pub fn p(&self) -> usize {
        self.phi.len()
    }

    pub fn n_vars(&self) -> usize {
        self.c.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn intercept(&self) -> &DVector<f64> {
        &self.c
    }

    pub fn phi(&self) -> &[DMatrix<f64>] {
        &self.phi
    }

    pub fn residuals(&self) -> &DMatrix<f64> {
        &self.residuals
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    /// Divisor used for the residual covariance (the series length L).
    pub fn n_obs(&self) -> usize {
        self.n_obs
    }

    /// The N × L data the residuals were computed on.
    pub fn sample(&self) -> &DMatrix<f64> {
        &self.sample
    }

    pub fn has_residuals(&self) -> bool {
        self.residuals.ncols() > 0
    }

    /// `(1 + Np) × N` coefficient block in regressor order.
    pub(crate) fn stacked_coefficients(&self) -> DMatrix<f64> {
        let n = self.n_vars();
        DMatrix::from_fn(1 + n * self.p(), n, |row, eq| {
            if row == 0 {
                self.c[eq]
            } else {
                let k = (row - 1) / n;
                self.phi[k][(eq, (row - 1) % n)]
            }
        })
    }

    /// One-step prediction from `history`, whose last column is y_T.
    pub fn predict_from(&self, history: &DMatrix<f64>) -> Result<DVector<f64>> {
        let p = self.p();
        if history.nrows() != self.n_vars() {
            return Err(Error::LengthMismatch { left: history.nrows(), right: self.n_vars() });
        }
        if history.ncols() < p {
            return Err(Error::InsufficientData { needed: p, got: history.ncols() });
        }
        let last = history.ncols() - 1;
        let mut y = self.c.clone();
        for (k, phi) in self.phi.iter().enumerate() {
            y += phi * history.column(last - k);
        }
        Ok(y)
    }

    /// Per-variable residual standard deviations `sqrt(Σ̃[n,n])`.
    pub fn residual_std(&self) -> Vec<f64> {
        (0..self.n_vars()).map(|i| self.sigma[(i, i)].max(0.0).sqrt()).collect()
    }
}

/// Companion (VAR(1)) form of a VAR(p) and its eigenvalue moduli.
#[derive(Debug, Clone, PartialEq)]
pub struct CompanionMatrix {
    pub m: DMatrix<f64>,
    /// Moduli of the N·p eigenvalues, sorted descending.
    pub eigen_moduli: Vec<f64>,
}

impl CompanionMatrix {
    pub fn max_modulus(&self) -> f64 {
        self.eigen_moduli.first().copied().unwrap_or(0.0)
    }
}

pub fn companion(model: &VarModel) -> Result<CompanionMatrix> {
    let (n, p) = (model.n_vars(), model.p());
    let dim = n * p;
    let mut m = DMatrix::zeros(dim, dim);
    for (k, phi) in model.phi().iter().enumerate() {
        m.view_mut((0, k * n), (n, n)).copy_from(phi);
    }
    for i in n..dim {
        m[(i, i - n)] = 1.0;
    }
    let eig: Vec<Complex<f64>> = m.complex_eigenvalues().iter().copied().collect();
    let mut eigen_moduli: Vec<f64> = eig.iter().map(|z| z.norm()).collect();
    if eigen_moduli.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("companion eigenvalue computation failed".into()));
    }
    eigen_moduli.sort_by(|a, b| b.total_cmp(a));
    Ok(CompanionMatrix { m, eigen_moduli })
}

/// True iff every eigenvalue modulus is below `1 − tol`.
pub fn is_stable(cm: &CompanionMatrix, tol: f64) -> bool {
    cm.max_modulus() < 1.0 - tol
}

/// Multi-step forecast with the constant 95% band `1.96·σ_ε`.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastResult {
    /// N × H point forecasts.
    pub point: DMatrix<f64>,
    pub half_width: Vec<f64>,
    pub horizon: usize,
}

/// Iterates the VAR recursion `h` steps past the end of `history`, feeding
/// forecasts back in as lagged values.
pub fn forecast(model: &VarModel, history: &DMatrix<f64>, h: usize) -> Result<ForecastResult> {
    if h == 0 {
        return Err(Error::InvalidParameter("forecast horizon must be at least 1".into()));
    }
    let (n, p) = (model.n_vars(), model.p());
    if history.nrows() != n {
        return Err(Error::LengthMismatch { left: history.nrows(), right: n });
    }
    if history.ncols() < p {
        return Err(Error::InsufficientData { needed: p, got: history.ncols() });
    }
    let mut window = history.columns(history.ncols() - p, p).into_owned();
    let mut point = DMatrix::zeros(n, h);
    for step in 0..h {
        let next = model.predict_from(&window)?;
        point.set_column(step, &next);
        if p > 0 {
            let shifted = DMatrix::from_fn(n, p, |i, j| if j + 1 < p { window[(i, j + 1)] } else { next[i] });
            window = shifted;
        }
    }
    let half_width = model.residual_std().into_iter().map(|s| Z_95 * s).collect();
    Ok(ForecastResult { point, half_width, horizon: h })
}

/// Anything that maps the most recent observations to a one-step forecast.
pub trait OneStepForecaster {
    /// Number of trailing observations consumed per prediction.
    fn lookback(&self) -> usize;

    /// `history` is N × lookback, oldest column first.
    fn predict_next(&self, history: &DMatrix<f64>) -> Result<DVector<f64>>;
}

impl OneStepForecaster for VarModel {
    fn lookback(&self) -> usize {
        self.p()
    }

    fn predict_next(&self, history: &DMatrix<f64>) -> Result<DVector<f64>> {
        self.predict_from(history)
    }
}

/// Predicts every test sample from the true observations before it (never
/// from earlier forecasts). Output is N × test.L, aligned with the test frame.
pub fn rolling_one_step<F: OneStepForecaster + ?Sized>(
    forecaster: &F,
    frame: &MetricFrame,
    split: &SplitFrame,
) -> Result<DMatrix<f64>> {
    let (start, l) = (split.split_index, frame.len());
    if split.test.is_empty() || start >= l {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    if split.train.len() + split.test.len() != l {
        return Err(Error::LengthMismatch { left: split.train.len() + split.test.len(), right: l });
    }
    let w = forecaster.lookback();
    if start < w {
        return Err(Error::InsufficientData { needed: w, got: start });
    }
    let data = frame.data();
    let mut out = DMatrix::zeros(frame.n_vars(), l - start);
    for t in start..l {
        let hist = data.columns(t - w, w).into_owned();
        out.set_column(t - start, &forecaster.predict_next(&hist)?);
    }
    Ok(out)
}

/// JSON form of a model: `{p, c, phi, sigma, names}`, matrices row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub p: usize,
    pub names: Vec<String>,
    pub c: Vec<f64>,
    /// One row-major N×N block per lag.
    pub phi: Vec<Vec<f64>>,
    /// Row-major N×N.
    pub sigma: Vec<f64>,
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

impl From<&VarModel> for ModelFile {
    fn from(m: &VarModel) -> Self {
        Self {
            p: m.p(),
            names: m.names.clone(),
            c: m.c.as_slice().to_vec(),
            phi: m.phi.iter().map(row_major).collect(),
            sigma: row_major(&m.sigma),
        }
    }
}

impl TryFrom<ModelFile> for VarModel {
    type Error = Error;

    fn try_from(f: ModelFile) -> Result<Self> {
        let n = f.c.len();
        if f.phi.len() != f.p || f.phi.iter().any(|b| b.len() != n * n) || f.sigma.len() != n * n {
            return Err(Error::InvalidParameter("model file has inconsistent dimensions".into()));
        }
        let phi = f.phi.iter().map(|b| DMatrix::from_row_slice(n, n, b)).collect();
        VarModel::from_parts(f.names, f.c, phi, DMatrix::from_row_slice(n, n, &f.sigma))
    }
}
