//! Single-hidden-layer perceptron with a linear multi-output layer, trained
//! by mini-batch gradient descent on the half mean squared error.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::substream;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Identity,
}

impl Activation {
    fn apply(self, a: f64) -> f64 {
        match self {
            Self::Tanh => a.tanh(),
            Self::Identity => a,
        }
    }

    /// Derivative expressed through the activated value.
    fn slope(self, h: f64) -> f64 {
        match self {
            Self::Tanh => 1.0 - h * h,
            Self::Identity => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerceptronParams {
    pub hidden: usize,
    pub epochs: usize,
    pub step: f64,
    pub batch: usize,
    pub activation: Activation,
}

impl Default for PerceptronParams {
    fn default() -> Self {
        Self { hidden: 30, epochs: 30, step: 0.05, batch: 8, activation: Activation::Tanh }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub activation: Activation,
    /// hidden × inputs.
    pub w1: DMatrix<f64>,
    pub b1: DVector<f64>,
    /// outputs × hidden.
    pub w2: DMatrix<f64>,
    pub b2: DVector<f64>,
}

/// Gradient of the loss with the same layout as [`Network`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub w1: DMatrix<f64>,
    pub b1: DVector<f64>,
    pub w2: DMatrix<f64>,
    pub b2: DVector<f64>,
}

impl Gradient {
    pub fn flatten(&self) -> Vec<f64> {
        [self.w1.as_slice(), self.b1.as_slice(), self.w2.as_slice(), self.b2.as_slice()].concat()
    }
}

impl Network {
    /// Glorot-uniform weights and zero biases from `rng`.
    pub fn init<R: Rng + ?Sized>(inputs: usize, hidden: usize, outputs: usize, activation: Activation, rng: &mut R) -> Self {
        let a1 = (6.0 / (inputs + hidden) as f64).sqrt();
        let a2 = (6.0 / (hidden + outputs) as f64).sqrt();
        let w1 = DMatrix::from_fn(hidden, inputs, |_, _| rng.random_range(-a1..a1));
        let w2 = DMatrix::from_fn(outputs, hidden, |_, _| rng.random_range(-a2..a2));
        Self { activation, w1, b1: DVector::zeros(hidden), w2, b2: DVector::zeros(outputs) }
    }

    /// The linear map `x ↦ coefᵀ x + intercept` as an identity-activation
    /// network whose hidden layer passes the inputs through unchanged.
    pub fn from_linear(coef: &DMatrix<f64>, intercept: &DVector<f64>) -> Self {
        let d = coef.nrows();
        Self {
            activation: Activation::Identity,
            w1: DMatrix::identity(d, d),
            b1: DVector::zeros(d),
            w2: coef.transpose(),
            b2: intercept.clone(),
        }
    }

    pub fn n_params(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len()
    }

    pub fn params(&self) -> Vec<f64> {
        [self.w1.as_slice(), self.b1.as_slice(), self.w2.as_slice(), self.b2.as_slice()].concat()
    }

    pub fn set_params(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.n_params() {
            return Err(Error::LengthMismatch { left: flat.len(), right: self.n_params() });
        }
        let mut rest = flat;
        for dst in [self.w1.as_mut_slice(), self.b1.as_mut_slice(), self.w2.as_mut_slice(), self.b2.as_mut_slice()] {
            let (head, tail) = rest.split_at(dst.len());
            dst.copy_from_slice(head);
            rest = tail;
        }
        Ok(())
    }

    fn hidden(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut a = x * self.w1.transpose();
        for mut row in a.row_iter_mut() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.activation.apply(*v + self.b1[j]);
            }
        }
        a
    }

    fn output(&self, h: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = h * self.w2.transpose();
        for mut row in out.row_iter_mut() {
            row += self.b2.transpose();
        }
        out
    }

    /// Outputs for each row of `x`.
    pub fn forward(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.output(&self.hidden(x))
    }

    pub fn predict(&self, x: &DVector<f64>) -> DVector<f64> {
        let h = (&self.w1 * x + &self.b1).map(|a| self.activation.apply(a));
        &self.w2 * h + &self.b2
    }

    /// `(1 / 2m) Σ ‖f(x_i) − y_i‖²` over the m rows and its gradient.
    pub fn loss_and_gradient(&self, x: &DMatrix<f64>, y: &DMatrix<f64>) -> (f64, Gradient) {
        let m = x.nrows().max(1) as f64;
        let h = self.hidden(x);
        let out = self.output(&h);
        let delta2 = (out - y) / m;
        let loss = 0.5 * m * delta2.norm_squared();
        let w2 = delta2.transpose() * &h;
        let b2 = delta2.row_sum().transpose();
        let mut delta1 = &delta2 * &self.w2;
        delta1.zip_apply(&h, |d, hv| *d *= self.activation.slope(hv));
        let w1 = delta1.transpose() * x;
        let b1 = delta1.row_sum().transpose();
        (loss, Gradient { w1, b1, w2, b2 })
    }

    fn descend(&mut self, g: &Gradient, step: f64) {
        self.w1 -= &g.w1 * step;
        self.b1 -= &g.b1 * step;
        self.w2 -= &g.w2 * step;
        self.b2 -= &g.b2 * step;
    }

    /// Initialises from the "perceptron" stream of `seed` and runs the fixed
    /// number of epochs, reshuffling rows each epoch.
    pub fn train(x: &DMatrix<f64>, y: &DMatrix<f64>, params: &PerceptronParams, seed: u64) -> Result<Self> {
        if params.hidden == 0 || params.epochs == 0 || params.batch == 0 || !(params.step > 0.0) {
            return Err(Error::InvalidParameter(
                "perceptron needs hidden ≥ 1, epochs ≥ 1, batch ≥ 1 and a positive step".into(),
            ));
        }
        if x.nrows() != y.nrows() || x.nrows() == 0 {
            return Err(Error::LengthMismatch { left: x.nrows(), right: y.nrows() });
        }
        let mut rng = substream(seed, "perceptron", 0);
        let mut net = Self::init(x.ncols(), params.hidden, y.ncols(), params.activation, &mut rng);
        let mut order: Vec<usize> = (0..x.nrows()).collect();
        for _ in 0..params.epochs {
            order.shuffle(&mut rng);
            for chunk in order.chunks(params.batch) {
                let xb = x.select_rows(chunk);
                let yb = y.select_rows(chunk);
                let (_, g) = net.loss_and_gradient(&xb, &yb);
                net.descend(&g, params.step);
            }
            if net.params().iter().any(|v| !v.is_finite()) {
                return Err(Error::Numerical("perceptron training diverged".into()));
            }
        }
        Ok(net)
    }
}
