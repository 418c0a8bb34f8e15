//! Sliding-window supervised learners for one-step forecasting.
//!
//! A frame is reframed as pairs (flattened window of the last w observations,
//! next observation). Inputs and targets are z-scored with training
//! statistics; every learner works in that space and predictions are mapped
//! back to the original units.

mod forest;
mod perceptron;
mod ridge;

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

pub use forest::{Forest, ForestParams, Tree};
pub use perceptron::{Activation, Gradient, Network, PerceptronParams};
pub use ridge::{Ridge, RidgeParams};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::ingest::MetricFrame;
use crate::varmodel::OneStepForecaster;

#[derive(Debug, Clone, PartialEq)]
pub struct WindowedDataset {
    /// (L − w) × (N·w); row t is y_t, …, y_{t+w−1} flattened oldest first,
    /// so column `k·N + n` holds variable n at window slot k.
    pub inputs: DMatrix<f64>,
    /// (L − w) × N; row t is y_{t+w}.
    pub targets: DMatrix<f64>,
    pub w: usize,
}

impl WindowedDataset {
    pub fn new(inputs: DMatrix<f64>, targets: DMatrix<f64>, w: usize) -> Result<Self> {
        let n = targets.ncols();
        if inputs.nrows() != targets.nrows() {
            return Err(Error::LengthMismatch { left: inputs.nrows(), right: targets.nrows() });
        }
        if w == 0 || n == 0 || inputs.ncols() != n * w {
            return Err(Error::InvalidParameter(format!(
                "inputs need N·w = {} columns, got {}",
                n * w,
                inputs.ncols()
            )));
        }
        Ok(Self { inputs, targets, w })
    }

    pub fn rows(&self) -> usize {
        self.targets.nrows()
    }

    pub fn n_vars(&self) -> usize {
        self.targets.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.rows() == 0
    }
}

pub fn make_windows(frame: &MetricFrame, w: usize) -> Result<WindowedDataset> {
    let (n, l) = (frame.n_vars(), frame.len());
    if w == 0 {
        return Err(Error::InvalidParameter("window length must be at least 1".into()));
    }
    if l <= w {
        return Err(Error::InsufficientData { needed: w + 1, got: l });
    }
    let data = frame.data();
    let inputs = DMatrix::from_fn(l - w, n * w, |t, col| data[(col % n, t + col / n)]);
    let targets = DMatrix::from_fn(l - w, n, |t, var| data[(var, t + w)]);
    Ok(WindowedDataset { inputs, targets, w })
}

/// Flattens an N × w history block (oldest column first) into a window row.
pub fn flatten_window(history: &DMatrix<f64>) -> DVector<f64> {
    let (n, w) = history.shape();
    DVector::from_fn(n * w, |i, _| history[(i % n, i / n)])
}

/// Column-wise z-scoring. Zero-variance columns are only centred and are
/// reported as inactive.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: DVector<f64>,
    pub scale: DVector<f64>,
    pub active: Vec<bool>,
}

impl Standardizer {
    pub fn fit(m: &DMatrix<f64>) -> Self {
        let rows = m.nrows().max(1) as f64;
        let mean = DVector::from_fn(m.ncols(), |j, _| m.column(j).sum() / rows);
        let mut active = Vec::with_capacity(m.ncols());
        let scale = DVector::from_fn(m.ncols(), |j, _| {
            let var = m.column(j).iter().map(|v| (v - mean[j]).powi(2)).sum::<f64>() / rows;
            let sd = var.sqrt();
            let ok = sd > 1e-12 * mean[j].abs().max(1.0);
            active.push(ok);
            if ok {
                sd
            } else {
                1.0
            }
        });
        Self { mean, scale, active }
    }

    pub fn transform(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| (m[(i, j)] - self.mean[j]) / self.scale[j])
    }

    pub fn transform_row(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(x.len(), |j, _| (x[j] - self.mean[j]) / self.scale[j])
    }

    pub fn inverse_row(&self, z: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(z.len(), |j, _| z[j] * self.scale[j] + self.mean[j])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LearnerSpec {
    Linear(RidgeParams),
    Forest(ForestParams),
    Perceptron(PerceptronParams),
}

impl LearnerSpec {
    pub const NAMES: [&'static str; 3] = ["linear", "forest", "mlp"];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Linear(_) => "linear",
            Self::Forest(_) => "forest",
            Self::Perceptron(_) => "mlp",
        }
    }
}

impl FromStr for LearnerSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" | "ridge" => Ok(Self::Linear(RidgeParams::default())),
            "forest" | "rf" => Ok(Self::Forest(ForestParams::default())),
            "mlp" | "perceptron" => Ok(Self::Perceptron(PerceptronParams::default())),
            other => Err(Error::InvalidParameter(format!(
                "unknown learner `{other}` (valid: {})",
                Self::NAMES.join(", ")
            ))),
        }
    }
}

impl fmt::Display for LearnerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FittedModel {
    Ridge(Ridge),
    /// One forest per target variable.
    Forest(Vec<Forest>),
    Perceptron(Network),
    /// Degenerate inputs: predict the training target mean.
    Mean,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FittedLearner {
    pub w: usize,
    pub n_vars: usize,
    pub input_scaler: Standardizer,
    pub target_scaler: Standardizer,
    pub model: FittedModel,
}

/// Fits `spec` on `data`. All randomness is drawn from streams derived from
/// `seed`; `exec` controls how independent sub-models are scheduled.
pub fn train(spec: &LearnerSpec, data: &WindowedDataset, seed: u64, exec: Exec) -> Result<FittedLearner> {
    if data.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    if data.inputs.iter().chain(data.targets.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Domain("training data contains non-finite values".into()));
    }
    let input_scaler = Standardizer::fit(&data.inputs);
    let target_scaler = Standardizer::fit(&data.targets);
    let x = input_scaler.transform(&data.inputs);
    let y = target_scaler.transform(&data.targets);
    let model = if !input_scaler.active.iter().any(|&a| a) {
        FittedModel::Mean
    } else {
        match spec {
            LearnerSpec::Linear(p) => FittedModel::Ridge(Ridge::fit(&x, &y, &input_scaler.active, p)?),
            LearnerSpec::Forest(p) => FittedModel::Forest(Forest::fit_per_target(&x, &y, p, seed, exec)?),
            LearnerSpec::Perceptron(p) => FittedModel::Perceptron(Network::train(&x, &y, p, seed)?),
        }
    };
    Ok(FittedLearner { w: data.w, n_vars: data.n_vars(), input_scaler, target_scaler, model })
}

impl FittedLearner {
    /// Forecast of the next observation from a flattened N·w window.
    pub fn predict_one_step(&self, window: &DVector<f64>) -> Result<DVector<f64>> {
        let d = self.n_vars * self.w;
        if window.len() != d {
            return Err(Error::LengthMismatch { left: window.len(), right: d });
        }
        let z = self.input_scaler.transform_row(window);
        let out = match &self.model {
            FittedModel::Ridge(r) => r.predict(&z),
            FittedModel::Forest(fs) => DVector::from_fn(self.n_vars, |i, _| fs[i].predict(z.as_slice())),
            FittedModel::Perceptron(net) => net.predict(&z),
            FittedModel::Mean => DVector::zeros(self.n_vars),
        };
        Ok(self.target_scaler.inverse_row(&out))
    }
}

impl OneStepForecaster for FittedLearner {
    fn lookback(&self) -> usize {
        self.w
    }

    fn predict_next(&self, history: &DMatrix<f64>) -> Result<DVector<f64>> {
        if history.nrows() != self.n_vars {
            return Err(Error::LengthMismatch { left: history.nrows(), right: self.n_vars });
        }
        if history.ncols() < self.w {
            return Err(Error::InsufficientData { needed: self.w, got: history.ncols() });
        }
        let recent = history.columns(history.ncols() - self.w, self.w).into_owned();
        self.predict_one_step(&flatten_window(&recent))
    }
}
