//! Gaussian VAR(p) simulator used by the Monte-Carlo checks, the bootstrap
//! tests and the benchmarks.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::ingest::MetricFrame;
use crate::oirf::cholesky_lower;

#[derive(Debug, Clone)]
pub struct VarProcess {
    pub c: DVector<f64>,
    pub phi: Vec<DMatrix<f64>>,
    chol: DMatrix<f64>,
}

impl VarProcess {
    pub fn new(c: Vec<f64>, phi: Vec<DMatrix<f64>>, sigma: &DMatrix<f64>) -> Result<Self> {
        let n = c.len();
        if phi.is_empty() {
            return Err(Error::InvalidParameter("process needs at least one lag".into()));
        }
        if phi.iter().any(|m| m.shape() != (n, n)) || sigma.shape() != (n, n) {
            return Err(Error::InvalidParameter("coefficient shapes do not match intercept".into()));
        }
        Ok(Self { c: DVector::from_vec(c), phi, chol: cholesky_lower(sigma)? })
    }

    pub fn n_vars(&self) -> usize {
        self.c.len()
    }

    /// Simulates `len` observations after discarding `burn_in` start-up
    /// samples (the recursion starts from zeros).
    pub fn simulate<R: Rng + ?Sized>(&self, len: usize, burn_in: usize, rng: &mut R) -> DMatrix<f64> {
        let n = self.n_vars();
        let p = self.phi.len();
        let total = len + burn_in + p;
        let mut y = DMatrix::zeros(n, total);
        for t in p..total {
            let z = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
            let mut next = &self.c + &self.chol * z;
            for (k, phi) in self.phi.iter().enumerate() {
                next += phi * y.column(t - 1 - k);
            }
            y.set_column(t, &next);
        }
        y.columns(total - len, len).into_owned()
    }

    /// Like [`simulate`](Self::simulate), wrapped as a frame with variables
    /// `y1..yN`. Fails if an explosive process overflowed.
    pub fn simulate_frame<R: Rng + ?Sized>(&self, len: usize, burn_in: usize, rng: &mut R) -> Result<MetricFrame> {
        let n = self.n_vars();
        let names: Vec<String> = (1..=n).map(|i| format!("y{i}")).collect();
        MetricFrame::new(names, vec![String::new(); n], self.simulate(len, burn_in, rng), 1.0)
    }
}
