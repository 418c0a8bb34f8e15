//! The VAR diagnostic battery: lag selection, residual autocorrelation,
//! unit roots, structural breaks and stability, plus the report that
//! bundles them.

mod adf;
mod aic;
mod cusum;
mod dist;
mod serial;

use std::io::Write;

use serde::Serialize;

pub use adf::{adf_critical_values, adf_p_value, adf_test, AdfResult, AdfSpec};
pub use aic::{aic_scan, aic_value, AicScan};
pub use cusum::{cusum_paths, cusum_test, CusumPath, CUSUM_BOUNDARY};
pub use dist::{tail_probability, Distribution};
pub use serial::{es_test, lm_test, serial_tests, SerialOutcome};

use crate::error::{Error, Result};
use crate::ingest::MetricFrame;
use crate::varmodel::{companion, fit_var, is_stable};

/// Significance level used for every reject/fail-to-reject decision.
pub const ALPHA: f64 = 0.05;

/// Default residual lag for the autocorrelation tests.
pub const DEFAULT_ERROR_LAG: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "dist", rename_all = "snake_case")]
pub enum DegreesOfFreedom {
    ChiSquare { k: f64 },
    F { m: f64, l: f64 },
    DickeyFuller { nobs: usize, lags: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub df: DegreesOfFreedom,
    pub alpha: f64,
    pub reject: bool,
}

impl TestResult {
    pub fn new(statistic: f64, p_value: f64, df: DegreesOfFreedom, alpha: f64) -> Self {
        let p_value = p_value.clamp(0.0, 1.0);
        Self { statistic, p_value, df, alpha, reject: p_value < alpha }
    }
}

#[derive(Debug, Clone)]
pub struct DiagnoseOptions {
    pub p_max: usize,
    /// Residual lags ξ = 1..=h for LM/ES.
    pub h: usize,
    /// Lag orders to run LM/ES on; the two best by AIC when `None`.
    pub test_lags: Option<Vec<usize>>,
    /// Model lag for CUSUM and stability; the AIC choice when `None`.
    pub p: Option<usize>,
    /// ADF augmentation lag; the AIC choice when `None`.
    pub adf_lags: Option<usize>,
    pub adf_spec: AdfSpec,
    pub stability_tol: f64,
}

impl Default for DiagnoseOptions {
    fn default() -> Self {
        Self {
            p_max: 15,
            h: DEFAULT_ERROR_LAG,
            test_lags: None,
            p: None,
            adf_lags: None,
            adf_spec: AdfSpec::Constant,
            stability_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SerialEntry {
    /// VAR lag order of the tested model.
    pub lag: usize,
    pub xi: usize,
    pub stat: f64,
    pub p: f64,
    pub df: DegreesOfFreedom,
    pub reject: bool,
}

impl SerialEntry {
    fn new(lag: usize, xi: usize, r: &TestResult) -> Self {
        Self { lag, xi, stat: r.statistic, p: r.p_value, df: r.df, reject: r.reject }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdfEntry {
    pub variable: String,
    #[serde(flatten)]
    pub result: AdfResult,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CusumVariable {
    pub variable: String,
    pub crossed: bool,
    pub max_excursion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CusumSummary {
    pub crossed: bool,
    pub max_excursion: f64,
    pub boundary: f64,
    pub variables: Vec<CusumVariable>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilitySummary {
    pub max_modulus: f64,
    pub stable: bool,
    pub eigen_moduli: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticReport {
    /// AIC(p) for p = 1..=p_max; singular fits serialise as `null`.
    pub aic: Vec<f64>,
    pub best_p: usize,
    /// Lag of the model behind the CUSUM and stability sections.
    pub p_used: usize,
    pub lm: Vec<SerialEntry>,
    pub es: Vec<SerialEntry>,
    pub adf: Vec<AdfEntry>,
    pub cusum: CusumSummary,
    pub stability: StabilitySummary,
    #[serde(skip)]
    pub cusum_paths: Vec<CusumPath>,
}

impl DiagnosticReport {
    /// Long-format `variable,k,time,value,boundary` rows of the CUSUM paths.
    pub fn write_cusum_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let csv_err = |e: csv::Error| Error::Csv(e.to_string());
        w.write_record(["variable", "k", "time", "value", "boundary"]).map_err(csv_err)?;
        for p in &self.cusum_paths {
            for (k, (t, v)) in p.times().into_iter().zip(&p.path).enumerate() {
                w.write_record([p.variable.clone(), k.to_string(), format!("{t}"), format!("{v}"), format!("{}", p.boundary)])
                    .map_err(csv_err)?;
            }
        }
        w.flush().map_err(|e| Error::Csv(e.to_string()))
    }

    /// `p,aic` rows.
    pub fn write_aic_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let csv_err = |e: csv::Error| Error::Csv(e.to_string());
        w.write_record(["p", "aic"]).map_err(csv_err)?;
        for (i, v) in self.aic.iter().enumerate() {
            w.write_record([(i + 1).to_string(), format!("{v}")]).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::Csv(e.to_string()))
    }
}

/// Runs the full battery on `frame`.
pub fn diagnose(frame: &MetricFrame, opts: &DiagnoseOptions) -> Result<DiagnosticReport> {
    let scan = aic_scan(frame, opts.p_max)?;
    let test_lags = match &opts.test_lags {
        Some(lags) => lags.clone(),
        None => scan.ranked().into_iter().filter(|&p| scan.values[p - 1].is_finite()).take(2).collect(),
    };
    let mut lm = Vec::new();
    let mut es = Vec::new();
    for &lag in &test_lags {
        let model = fit_var(frame, lag)?;
        for o in serial_tests(&model, opts.h)? {
            lm.push(SerialEntry::new(lag, o.xi, &o.lm));
            es.push(SerialEntry::new(lag, o.xi, &o.es));
        }
    }

    let adf_lags = opts.adf_lags.unwrap_or(scan.best_p);
    let adf = (0..frame.n_vars())
        .map(|i| {
            Ok(AdfEntry {
                variable: frame.names()[i].clone(),
                result: adf_test(&frame.series(i), adf_lags, opts.adf_spec)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let p_used = opts.p.unwrap_or(scan.best_p);
    let model = fit_var(frame, p_used)?;
    let paths = cusum_test(&model)?;
    let cm = companion(&model)?;

    let variables: Vec<CusumVariable> = paths
        .iter()
        .map(|p| CusumVariable { variable: p.variable.clone(), crossed: p.crossed, max_excursion: p.max_excursion })
        .collect();
    let cusum = CusumSummary {
        crossed: variables.iter().any(|v| v.crossed),
        max_excursion: variables.iter().fold(0.0, |m, v| m.max(v.max_excursion)),
        boundary: CUSUM_BOUNDARY,
        variables,
    };
    let stability = StabilitySummary {
        max_modulus: cm.max_modulus(),
        stable: is_stable(&cm, opts.stability_tol),
        eigen_moduli: cm.eigen_moduli.clone(),
    };
    Ok(DiagnosticReport {
        aic: scan.values,
        best_p: scan.best_p,
        p_used,
        lm,
        es,
        adf,
        cusum,
        stability,
        cusum_paths: paths,
    })
}
