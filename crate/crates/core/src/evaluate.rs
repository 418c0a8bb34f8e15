//! Forecast scoring (RMSE / MAE / MAPE), wall-clock timing and the
//! per-technique comparison report.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Quantile of already-sorted data by linear interpolation between order
/// statistics at position `q·(n−1)`.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        n => {
            let pos = q.clamp(0.0, 1.0) * (n - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = (lo + 1).min(n - 1);
            let frac = pos - lo as f64;
            sorted[lo] + frac * (sorted[hi] - sorted[lo])
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarScore {
    pub rmse: f64,
    pub mae: f64,
    /// Mean absolute percentage error over the samples with non-zero actual
    /// value; `None` when every actual value is zero.
    pub mape: Option<f64>,
    /// Fraction of samples that entered the MAPE.
    pub mape_coverage: f64,
    pub zero_actuals: usize,
}

/// Scores each variable (row) of `predicted` against `actual`.
pub fn score(actual: &DMatrix<f64>, predicted: &DMatrix<f64>) -> Result<Vec<VarScore>> {
    if actual.shape() != predicted.shape() {
        return Err(Error::LengthMismatch { left: actual.len(), right: predicted.len() });
    }
    let t = actual.ncols();
    if t == 0 {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let mut out = Vec::with_capacity(actual.nrows());
    for i in 0..actual.nrows() {
        let (mut sq, mut abs, mut pct, mut zeros) = (0.0, 0.0, 0.0, 0usize);
        for j in 0..t {
            let (y, yhat) = (actual[(i, j)], predicted[(i, j)]);
            let e = y - yhat;
            sq += e * e;
            abs += e.abs();
            if y == 0.0 {
                zeros += 1;
            } else {
                pct += (e / y).abs();
            }
        }
        let used = t - zeros;
        out.push(VarScore {
            rmse: (sq / t as f64).sqrt(),
            mae: abs / t as f64,
            mape: (used > 0).then(|| 100.0 * pct / used as f64),
            mape_coverage: used as f64 / t as f64,
            zero_actuals: zeros,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingSummary {
    /// Wall-clock seconds per repetition, in run order.
    pub samples: Vec<f64>,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub iqr: f64,
}

impl TimingSummary {
    pub fn from_samples(samples: Vec<f64>) -> Self {
        let mut sorted = samples.clone();
        sorted.sort_by(f64::total_cmp);
        let (q1, median, q3) = (quantile(&sorted, 0.25), quantile(&sorted, 0.5), quantile(&sorted, 0.75));
        Self { samples, median, q1, q3, iqr: q3 - q1 }
    }
}

/// Runs `task` `reps` times serially and summarises the elapsed times.
/// A failing repetition aborts; the error carries the timings collected so far.
pub fn time_technique<F>(mut task: F, reps: usize) -> Result<TimingSummary>
where
    F: FnMut() -> Result<()>,
{
    if reps < 3 {
        return Err(Error::InvalidParameter(format!("timing needs at least 3 reps, got {reps}")));
    }
    let mut samples = Vec::with_capacity(reps);
    for _ in 0..reps {
        let start = Instant::now();
        if let Err(e) = task() {
            return Err(Error::TaskFailed { completed: samples, message: e.to_string() });
        }
        samples.push(start.elapsed().as_secs_f64());
    }
    Ok(TimingSummary::from_samples(samples))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TechniqueReport {
    pub name: String,
    pub window: usize,
    pub seed: u64,
    pub metrics: BTreeMap<String, VarScore>,
    pub timing: Option<TimingSummary>,
}

impl TechniqueReport {
    pub fn new(name: &str, window: usize, seed: u64, names: &[String], scores: Vec<VarScore>) -> Self {
        Self {
            name: name.into(),
            window,
            seed,
            metrics: names.iter().cloned().zip(scores).collect(),
            timing: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub flow_id: String,
    pub codec: String,
    pub config_hash: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub flow_id: String,
    pub codec: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
    pub techniques: Vec<TechniqueReport>,
    pub best_by_mape: BTreeMap<String, String>,
    /// Variables where several techniques share the best MAPE.
    pub mape_ties: BTreeMap<String, Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<serde_json::Value>,
}

/// Assembles the comparison report and marks, per variable, the technique
/// with the lowest MAPE. Ties go to the lexicographically first name and are
/// listed in `mape_ties`.
pub fn build_report(
    techniques: Vec<TechniqueReport>,
    diagnostics: Option<serde_json::Value>,
    meta: ReportMeta,
) -> Result<Report> {
    if techniques.is_empty() {
        return Err(Error::InvalidParameter("report needs at least one technique".into()));
    }
    let mut best_by_mape = BTreeMap::new();
    let mut mape_ties = BTreeMap::new();
    let vars: Vec<&String> = techniques[0].metrics.keys().collect();
    for var in vars {
        let mut cands: Vec<(f64, &str)> = techniques
            .iter()
            .filter_map(|t| t.metrics.get(var).and_then(|s| s.mape).map(|m| (m, t.name.as_str())))
            .collect();
        if cands.is_empty() {
            continue;
        }
        cands.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1)));
        let best = cands[0];
        let tied: Vec<String> = cands.iter().filter(|c| c.0 == best.0).map(|c| c.1.to_string()).collect();
        if tied.len() > 1 {
            mape_ties.insert(var.clone(), tied);
        }
        best_by_mape.insert(var.clone(), best.1.to_string());
    }
    Ok(Report {
        flow_id: meta.flow_id,
        codec: meta.codec,
        config_hash: meta.config_hash,
        techniques,
        best_by_mape,
        mape_ties,
        diagnostics,
    })
}

impl Report {
    /// Table-shaped CSV: one row per (technique, variable).
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let e = |e: csv::Error| Error::Csv(e.to_string());
        w.write_record(["technique", "variable", "rmse", "mae", "mape_percent", "mape_coverage", "best_mape"])
            .map_err(e)?;
        for t in &self.techniques {
            for (var, s) in &t.metrics {
                let best = self.best_by_mape.get(var).is_some_and(|b| b == &t.name);
                w.write_record([
                    t.name.clone(),
                    var.clone(),
                    format!("{}", s.rmse),
                    format!("{}", s.mae),
                    s.mape.map_or_else(String::new, |m| format!("{m}")),
                    format!("{}", s.mape_coverage),
                    best.to_string(),
                ])
                .map_err(e)?;
            }
        }
        w.flush().map_err(|e| Error::Csv(e.to_string()))
    }
}
