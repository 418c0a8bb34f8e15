//! Orthogonalised impulse responses.
//!
//! The reduced-form moving-average matrices Φ⁰_i of a VAR are rotated by the
//! lower Cholesky factor P of the residual covariance, Θ_i = Φ⁰_i P, so that
//! entry `[j, k]` of Θ_i is the response of variable j, i periods later, to a
//! one-standard-deviation orthogonal shock in variable k. Responses are in the
//! response variable's own units.
//!
//! The factorisation depends on the variable ordering. The ordering given to
//! [`orthogonal_irf`] is applied before factorising and undone afterwards, so
//! the returned matrices are always indexed by the original variables.

use std::io::Write;

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::evaluate::quantile;
use crate::exec::Exec;
use crate::ingest::{check_permutation, MetricFrame};
use crate::rng::substream;
use crate::varmodel::{fit_var, VarModel};

/// Default response horizon (periods).
pub const DEFAULT_HORIZON: usize = 25;

/// Lower-triangular P with P·Pᵀ = `sigma` and a strictly positive diagonal.
pub fn cholesky_lower(sigma: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = sigma.nrows();
    if sigma.ncols() != n {
        return Err(Error::LengthMismatch { left: n, right: sigma.ncols() });
    }
    let scale = sigma.amax().max(f64::MIN_POSITIVE);
    if (sigma - sigma.transpose()).amax() > 1e-10 * scale.max(1.0) {
        return Err(Error::InvalidParameter("covariance matrix is not symmetric".into()));
    }
    let mut l = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = sigma[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) {
            return Err(Error::NotPositiveDefinite { index: j });
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in j + 1..n {
            let mut s = sigma[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(l)
}

/// Reduced-form MA matrices Φ⁰_0 … Φ⁰_H with Φ⁰_0 = I and
/// Φ⁰_i = Σ_{k=1}^{min(i,p)} Φ_k Φ⁰_{i−k}.
pub fn ma_coefficients(model: &VarModel, horizon: usize) -> Vec<DMatrix<f64>> {
    let n = model.n_vars();
    let mut out: Vec<DMatrix<f64>> = Vec::with_capacity(horizon + 1);
    out.push(DMatrix::identity(n, n));
    for i in 1..=horizon {
        let mut acc = DMatrix::zeros(n, n);
        for (k, phi) in model.phi().iter().enumerate().take(i) {
            acc += phi * &out[i - k - 1];
        }
        out.push(acc);
    }
    out
}

/// Lower/upper 95% band per horizon, same shape as the responses.
#[derive(Debug, Clone, PartialEq)]
pub struct Bands {
    pub lower: Vec<DMatrix<f64>>,
    pub upper: Vec<DMatrix<f64>>,
    pub reps: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImpulseResponseSet {
    pub names: Vec<String>,
    /// Θ_0 … Θ_H in original variable order.
    pub theta: Vec<DMatrix<f64>>,
    pub bands: Option<Bands>,
    /// Variable order used for the factorisation (indices into `names`).
    pub ordering: Vec<usize>,
}

impl ImpulseResponseSet {
    pub fn horizon(&self) -> usize {
        self.theta.len() - 1
    }

    /// `(impulse, response, horizon, theta, lo95, hi95)` rows; without bands
    /// the band columns repeat theta.
    pub fn rows(&self) -> Vec<(String, String, usize, f64, f64, f64)> {
        let n = self.names.len();
        let mut rows = Vec::with_capacity(n * n * self.theta.len());
        for k in 0..n {
            for j in 0..n {
                for (i, th) in self.theta.iter().enumerate() {
                    let v = th[(j, k)];
                    let (lo, hi) = match &self.bands {
                        Some(b) => (b.lower[i][(j, k)], b.upper[i][(j, k)]),
                        None => (v, v),
                    };
                    rows.push((self.names[k].clone(), self.names[j].clone(), i, v, lo, hi));
                }
            }
        }
        rows
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let csv_err = |e: csv::Error| Error::Csv(e.to_string());
        w.write_record(["impulse_var", "response_var", "horizon", "theta", "lo95", "hi95"])
            .map_err(csv_err)?;
        for (imp, resp, h, v, lo, hi) in self.rows() {
            w.write_record([imp, resp, h.to_string(), format!("{v}"), format!("{lo}"), format!("{hi}")])
                .map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::Csv(e.to_string()))
    }
}

/// Θ_i = Φ⁰_i P with P the Cholesky factor of Σ̃_ε under `ordering`.
pub fn orthogonal_irf(model: &VarModel, horizon: usize, ordering: &[usize]) -> Result<ImpulseResponseSet> {
    let theta = orthogonal_responses(model, horizon, ordering)?;
    Ok(ImpulseResponseSet { names: model.names().to_vec(), theta, bands: None, ordering: ordering.to_vec() })
}

fn orthogonal_responses(model: &VarModel, horizon: usize, ordering: &[usize]) -> Result<Vec<DMatrix<f64>>> {
    let n = model.n_vars();
    check_permutation(ordering, n)?;
    let sigma = model.sigma();
    let permuted = DMatrix::from_fn(n, n, |i, j| sigma[(ordering[i], ordering[j])]);
    let p_perm = cholesky_lower(&permuted)?;
    // Impact matrix in original coordinates: response row `ordering[i]`,
    // shock column `ordering[k]` take P_perm[i, k].
    let mut impact = DMatrix::zeros(n, n);
    for i in 0..n {
        for k in 0..n {
            impact[(ordering[i], ordering[k])] = p_perm[(i, k)];
        }
    }
    Ok(ma_coefficients(model, horizon).iter().map(|m| m * &impact).collect())
}

#[derive(Debug, Clone)]
pub struct BootstrapOptions {
    pub horizon: usize,
    pub reps: usize,
    pub seed: u64,
    pub ordering: Vec<usize>,
    /// Permits fewer than 100 replicates (degenerate bands).
    pub allow_few_reps: bool,
    pub exec: Exec,
}

/// Residual-based recursive bootstrap bands (2.5% / 97.5% quantiles).
///
/// Each replicate rebuilds a series from the first p observations of the
/// model's estimation sample with resampled centred residuals, re-estimates
/// the VAR and recomputes the responses. Replicate `r` draws from its own
/// seed-derived stream, so the result depends only on `(seed, reps)`. The returned bands are widened where
/// needed so they always contain the point estimate.
pub fn bootstrap_bands(model: &VarModel, opts: &BootstrapOptions) -> Result<Bands> {
    if opts.reps == 0 || (opts.reps < 100 && !opts.allow_few_reps) {
        return Err(Error::InvalidParameter(format!(
            "bootstrap needs at least 100 replicates, got {}",
            opts.reps
        )));
    }
    if !model.has_residuals() {
        return Err(Error::InvalidParameter("bootstrap needs a model with residuals".into()));
    }
    let (n, p, l) = (model.n_vars(), model.p(), model.sample().ncols());
    let point = orthogonal_responses(model, opts.horizon, &opts.ordering)?;

    let resid = model.residuals();
    let mean = resid.column_mean();
    let centred = DMatrix::from_fn(n, l - p, |i, t| resid[(i, t)] - mean[i]);

    let draws = opts.exec.map_indexed(opts.reps, |r| {
        let mut rng = substream(opts.seed, "bootstrap", r as u64);
        let mut y = model.sample().clone();
        for t in p..l {
            let u = centred.column(rng.random_range(0..l - p));
            let mut next = model.intercept() + u;
            for (k, phi) in model.phi().iter().enumerate() {
                next += phi * y.column(t - 1 - k);
            }
            y.set_column(t, &next);
        }
        let star = MetricFrame::new(model.names().to_vec(), vec![String::new(); n], y, 1.0).ok()?;
        let refit = fit_var(&star, p).ok()?;
        orthogonal_responses(&refit, opts.horizon, &opts.ordering).ok()
    });
    let ok: Vec<Vec<DMatrix<f64>>> = draws.into_iter().flatten().collect();
    let failed = opts.reps - ok.len();
    if failed * 10 > opts.reps || ok.is_empty() {
        return Err(Error::BootstrapFailed { failed, reps: opts.reps });
    }

    let mut lower = Vec::with_capacity(point.len());
    let mut upper = Vec::with_capacity(point.len());
    let mut buf = Vec::with_capacity(ok.len());
    for (h, th) in point.iter().enumerate() {
        let mut lo = DMatrix::zeros(n, n);
        let mut hi = DMatrix::zeros(n, n);
        for j in 0..n {
            for k in 0..n {
                buf.clear();
                buf.extend(ok.iter().map(|d| d[h][(j, k)]));
                buf.sort_by(f64::total_cmp);
                lo[(j, k)] = quantile(&buf, 0.025).min(th[(j, k)]);
                hi[(j, k)] = quantile(&buf, 0.975).max(th[(j, k)]);
            }
        }
        lower.push(lo);
        upper.push(hi);
    }
    Ok(Bands { lower, upper, reps: opts.reps, failed })
}
