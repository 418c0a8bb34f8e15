//! The five subcommands.

use std::fs;
use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use nalgebra::DMatrix;
use serde::Serialize;
use varcast_core::diagnostics::{aic_scan, diagnose, AicScan, DiagnoseOptions};
use varcast_core::evaluate::{build_report, score, time_technique, ReportMeta, TechniqueReport, TimingSummary};
use varcast_core::learners::{make_windows, train, LearnerSpec};
use varcast_core::oirf::{bootstrap_bands, orthogonal_irf, BootstrapOptions};
use varcast_core::varmodel::{companion, is_stable, ModelFile};
use varcast_core::{fit_var, forecast, load_csv, rolling_one_step, split_70_30, Error, Exec, MetricFrame, Schema, VarModel};

use crate::config::{sha256_hex, Choice, CompareArgs, DataArgs, DiagnoseArgs, FitArgs, ForecastArgs, LagArgs, OirfArgs, RunConfig};
use crate::error::CliError;
use crate::output::Output;

type Result<T> = std::result::Result<T, CliError>;

const Z_95: f64 = 1.96;

/// Run metadata that varies between otherwise identical runs.
#[derive(Serialize)]
struct Meta<'a> {
    version: &'static str,
    started_unix: f64,
    elapsed_secs: f64,
    files: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    timing: Option<&'a [(String, TimingSummary)]>,
}

struct Clock {
    started_unix: f64,
    start: Instant,
}

impl Clock {
    fn start() -> Self {
        let started_unix = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64());
        Self { started_unix, start: Instant::now() }
    }

    fn finish(self, out: &mut Output, timing: Option<&[(String, TimingSummary)]>) -> Result<()> {
        let meta = Meta {
            version: env!("CARGO_PKG_VERSION"),
            started_unix: self.started_unix,
            elapsed_secs: self.start.elapsed().as_secs_f64(),
            files: out.written().iter().filter_map(|p| p.file_name()).map(|f| f.to_string_lossy().into_owned()).collect(),
            timing,
        };
        out.json("meta.json", &meta)
    }
}

fn load(data: &DataArgs) -> Result<(MetricFrame, String)> {
    let frame = load_csv(&data.input, &Schema::from_columns(&data.columns), data.missing)?;
    let bytes = fs::read(&data.input).map_err(|source| Error::Io { path: data.input.clone(), source })?;
    Ok((frame, sha256_hex(&bytes)))
}

/// Largest AIC scan bound the sample supports, capped at `p_max`.
fn feasible_p_max(frame: &MetricFrame, p_max: usize) -> Result<usize> {
    if p_max == 0 {
        return Err(CliError::Usage("--p-max must be at least 1".into()));
    }
    let (n, l) = (frame.n_vars(), frame.len());
    let cap = l.saturating_sub(2) / (n + 1);
    if cap == 0 {
        return Err(Error::InsufficientData { needed: n + 3, got: l }.into());
    }
    if cap < p_max {
        eprintln!("note: --p-max lowered from {p_max} to {cap} for a series of length {l}");
    }
    Ok(cap.min(p_max))
}

fn choose_p(frame: &MetricFrame, lag: &LagArgs) -> Result<(usize, Option<AicScan>)> {
    match lag.p {
        Choice::Fixed(p) => Ok((p, None)),
        Choice::Auto => {
            let scan = aic_scan(frame, feasible_p_max(frame, lag.p_max)?)?;
            Ok((scan.best_p, Some(scan)))
        }
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Csv(e.to_string())
}

pub fn cmd_diagnose(args: &DiagnoseArgs) -> Result<()> {
    let clock = Clock::start();
    let (frame, digest) = load(&args.data)?;
    let mut config = RunConfig::new("diagnose", &args.data, &args.common, &args.lag, digest);
    config.h = Some(args.h);
    config.test_lags = args.test_lags.clone();
    config.adf_spec = Some(args.adf_spec.to_string());
    config.adf_lags = args.adf_lags;
    let opts = DiagnoseOptions {
        p_max: feasible_p_max(&frame, args.lag.p_max)?,
        h: args.h,
        test_lags: args.test_lags.clone(),
        p: match args.lag.p {
            Choice::Auto => None,
            Choice::Fixed(p) => Some(p),
        },
        adf_lags: args.adf_lags,
        adf_spec: args.adf_spec,
        ..DiagnoseOptions::default()
    };
    let report = diagnose(&frame, &opts)?;
    let mut out = Output::create(&args.common.out, config)?;
    out.json("diagnostics.json", &report)?;
    out.csv("aic.csv", |w| report.write_aic_csv(w))?;
    out.csv("cusum.csv", |w| report.write_cusum_csv(w))?;
    out.csv("serial.csv", |buf| {
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(["test", "lag", "xi", "stat", "p", "reject"]).map_err(csv_err)?;
        for (name, rows) in [("lm", &report.lm), ("es", &report.es)] {
            for r in rows {
                w.write_record([
                    name.to_string(),
                    r.lag.to_string(),
                    r.xi.to_string(),
                    format!("{}", r.stat),
                    format!("{}", r.p),
                    r.reject.to_string(),
                ])
                .map_err(csv_err)?;
            }
        }
        w.flush().map_err(|e| Error::Csv(e.to_string()))
    })?;
    println!("best_p={} p_used={} stable={}", report.best_p, report.p_used, report.stability.stable);
    clock.finish(&mut out, None)
}

#[derive(Serialize)]
struct FitOutput {
    #[serde(flatten)]
    model: ModelFile,
    n_obs: usize,
    max_modulus: f64,
    stable: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    aic: Option<Vec<f64>>,
}

pub fn cmd_fit(args: &FitArgs) -> Result<()> {
    let clock = Clock::start();
    let (frame, digest) = load(&args.data)?;
    let config = RunConfig::new("fit", &args.data, &args.common, &args.lag, digest);
    let (p, scan) = choose_p(&frame, &args.lag)?;
    let model = fit_var(&frame, p)?;
    let cm = companion(&model)?;
    let payload = FitOutput {
        model: ModelFile::from(&model),
        n_obs: model.n_obs(),
        max_modulus: cm.max_modulus(),
        stable: is_stable(&cm, 1e-8),
        aic: scan.map(|s| s.values),
    };
    let mut out = Output::create(&args.common.out, config)?;
    out.json("model.json", &payload)?;
    println!("p={p} max_modulus={:.6} stable={}", payload.max_modulus, payload.stable);
    clock.finish(&mut out, None)
}

/// Reads a model written by `fit` and checks it against the input columns.
fn read_model(path: &Path, frame: &MetricFrame) -> Result<(VarModel, String)> {
    let bytes = fs::read(path).map_err(|source| Error::Io { path: path.into(), source })?;
    let file: ModelFile = serde_json::from_slice(&bytes)
        .map_err(|e| CliError::Usage(format!("{} is not a model file: {e}", path.display())))?;
    let model = VarModel::try_from(file)?;
    if model.names() != frame.names() {
        return Err(CliError::Usage(format!(
            "model variables [{}] do not match input columns [{}]",
            model.names().join(","),
            frame.names().join(",")
        )));
    }
    Ok((model, sha256_hex(&bytes)))
}

fn model_for(
    model_path: Option<&Path>,
    frame: &MetricFrame,
    lag: &LagArgs,
    config: &mut RunConfig,
) -> Result<VarModel> {
    match model_path {
        Some(path) => {
            let (model, digest) = read_model(path, frame)?;
            config.model_sha256 = Some(digest);
            Ok(model)
        }
        None => {
            let (p, _) = choose_p(frame, lag)?;
            Ok(fit_var(frame, p)?)
        }
    }
}

#[derive(Serialize)]
struct ForecastOutput<'a> {
    names: &'a [String],
    p: usize,
    horizon: usize,
    origin: usize,
    /// Per variable, steps 1..=horizon.
    point: Vec<Vec<f64>>,
    half_width: &'a [f64],
}

pub fn cmd_forecast(args: &ForecastArgs) -> Result<()> {
    let clock = Clock::start();
    let (frame, digest) = load(&args.data)?;
    let mut config = RunConfig::new("forecast", &args.data, &args.common, &args.lag, digest);
    config.horizon = Some(args.horizon);
    let model = model_for(args.model.as_deref(), &frame, &args.lag, &mut config)?;
    let fc = forecast(&model, frame.data(), args.horizon)?;
    let names = model.names();
    let payload = ForecastOutput {
        names,
        p: model.p(),
        horizon: fc.horizon,
        origin: frame.len(),
        point: fc.point.row_iter().map(|r| r.iter().copied().collect()).collect(),
        half_width: &fc.half_width,
    };
    let mut out = Output::create(&args.common.out, config)?;
    out.json("forecast.json", &payload)?;
    out.csv("forecast.csv", |buf| {
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(["variable", "step", "point", "lo95", "hi95"]).map_err(csv_err)?;
        for (i, name) in names.iter().enumerate() {
            for s in 0..fc.horizon {
                let v = fc.point[(i, s)];
                let hw = fc.half_width[i];
                w.write_record([name.clone(), (s + 1).to_string(), format!("{v}"), format!("{}", v - hw), format!("{}", v + hw)])
                    .map_err(csv_err)?;
            }
        }
        w.flush().map_err(|e| Error::Csv(e.to_string()))
    })?;
    clock.finish(&mut out, None)
}

fn resolve_ordering(names: &[String], ordering: Option<&[String]>) -> Result<Vec<usize>> {
    let Some(ordering) = ordering else {
        return Ok((0..names.len()).collect());
    };
    let idx: Vec<usize> = ordering
        .iter()
        .map(|o| {
            names.iter().position(|n| n == o).ok_or_else(|| {
                CliError::Usage(format!("unknown variable `{o}` in --ordering (valid: {})", names.join(", ")))
            })
        })
        .collect::<Result<_>>()?;
    let mut sorted = idx.clone();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != names.len() || idx.len() != names.len() {
        return Err(CliError::Usage(format!("--ordering must list each of {} exactly once", names.join(", "))));
    }
    Ok(idx)
}

#[derive(Serialize)]
struct OirfOutput {
    names: Vec<String>,
    ordering: Vec<String>,
    p: usize,
    horizon: usize,
    pairs: usize,
    reps: usize,
    failed_reps: usize,
}

pub fn cmd_oirf(args: &OirfArgs) -> Result<()> {
    let clock = Clock::start();
    let (frame, digest) = load(&args.data)?;
    let mut config = RunConfig::new("oirf", &args.data, &args.common, &args.lag, digest);
    config.horizon = Some(args.horizon);
    config.reps = Some(args.reps);
    config.ordering = args.ordering.clone();
    let mut model = model_for(args.model.as_deref(), &frame, &args.lag, &mut config)?;
    let ordering = resolve_ordering(model.names(), args.ordering.as_deref())?;
    if args.reps > 0 && !model.has_residuals() {
        model = model.with_residuals_from(&frame)?;
    }
    let mut irf = orthogonal_irf(&model, args.horizon, &ordering)?;
    if args.reps > 0 {
        let opts = BootstrapOptions {
            horizon: args.horizon,
            reps: args.reps,
            seed: args.common.seed,
            ordering: ordering.clone(),
            allow_few_reps: args.allow_few_reps,
            exec: Exec::default(),
        };
        irf.bands = Some(bootstrap_bands(&model, &opts)?);
    }
    let n = model.n_vars();
    let payload = OirfOutput {
        names: model.names().to_vec(),
        ordering: ordering.iter().map(|&i| model.names()[i].clone()).collect(),
        p: model.p(),
        horizon: args.horizon,
        pairs: n * n,
        reps: args.reps,
        failed_reps: irf.bands.as_ref().map_or(0, |b| b.failed),
    };
    let mut out = Output::create(&args.common.out, config)?;
    out.json("oirf.json", &payload)?;
    out.csv("oirf.csv", |w| irf.write_csv(w))?;
    clock.finish(&mut out, None)
}

enum Technique {
    Var,
    Learner(LearnerSpec),
}

impl Technique {
    const NAMES: [&'static str; 4] = ["var", "linear", "forest", "mlp"];

    fn parse(name: &str) -> Result<Self> {
        if name == "var" {
            return Ok(Self::Var);
        }
        name.parse::<LearnerSpec>().map(Self::Learner).map_err(|_| {
            CliError::Usage(format!("unknown learner `{name}` (valid: {})", Self::NAMES.join(", ")))
        })
    }
}

/// Fits on the train segment and predicts every test sample one step ahead.
fn run_technique(
    tech: &Technique,
    frame: &MetricFrame,
    split: &varcast_core::SplitFrame,
    p: usize,
    w: usize,
    seed: u64,
) -> varcast_core::Result<(DMatrix<f64>, Option<Vec<f64>>)> {
    match tech {
        Technique::Var => {
            let model = fit_var(&split.train, p)?;
            let pred = rolling_one_step(&model, frame, split)?;
            Ok((pred, Some(model.residual_std())))
        }
        Technique::Learner(spec) => {
            let data = make_windows(&split.train, w)?;
            let fitted = train(spec, &data, seed, Exec::default())?;
            Ok((rolling_one_step(&fitted, frame, split)?, None))
        }
    }
}

pub fn cmd_compare(args: &CompareArgs) -> Result<()> {
    let clock = Clock::start();
    let techniques: Vec<(String, Technique)> = args
        .learners
        .iter()
        .map(|n| Technique::parse(n.trim()).map(|t| (n.trim().to_string(), t)))
        .collect::<Result<_>>()?;
    if techniques.is_empty() {
        return Err(CliError::Usage("--learners needs at least one technique".into()));
    }
    if args.timing_reps != 0 && args.timing_reps < 3 {
        return Err(CliError::Usage("--timing-reps must be 0 or at least 3".into()));
    }
    let (frame, digest) = load(&args.data)?;
    let flow_id = args.flow_id.clone().unwrap_or_else(|| {
        args.data.input.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned())
    });
    let mut config = RunConfig::new("compare", &args.data, &args.common, &args.lag, digest);
    config.window = Some(args.window);
    config.learners = Some(techniques.iter().map(|(n, _)| n.clone()).collect());
    config.timing_reps = Some(args.timing_reps);
    config.flow_id = Some(flow_id.clone());
    config.codec = Some(args.codec.clone());

    let split = split_70_30(&frame)?;
    let (p, _) = match (args.lag.p, args.window) {
        (Choice::Fixed(p), Choice::Fixed(_)) => (p, None),
        _ => choose_p(&split.train, &args.lag)?,
    };
    let w = match args.window {
        Choice::Fixed(w) => w,
        Choice::Auto => p,
    };

    let actual = split.test.data();
    let mut reports = Vec::new();
    let mut timings = Vec::new();
    let mut predictions = Vec::new();
    let mut var_band = None;
    for (name, tech) in &techniques {
        let (pred, band) = run_technique(tech, &frame, &split, p, w, args.common.seed)?;
        let window = if matches!(tech, Technique::Var) { p } else { w };
        reports.push(TechniqueReport::new(name, window, args.common.seed, frame.names(), score(actual, &pred)?));
        if args.timing_reps > 0 {
            let t = time_technique(|| run_technique(tech, &frame, &split, p, w, args.common.seed).map(|_| ()), args.timing_reps)?;
            timings.push((name.clone(), t));
        }
        if band.is_some() && var_band.is_none() {
            var_band = band;
        }
        predictions.push((name.clone(), pred));
    }
    let meta = ReportMeta { flow_id, codec: args.codec.clone(), config_hash: None };
    let mut report = build_report(reports, None, meta)?;

    let mut out = Output::create(&args.common.out, config)?;
    report.config_hash = Some(out.hash().to_string());
    out.json("report.json", &report)?;
    out.csv("report.csv", |w| report.write_csv(w))?;
    out.csv("predictions.csv", |buf| {
        let mut w = csv::Writer::from_writer(buf);
        let mut header = vec!["t".to_string(), "variable".into(), "actual".into()];
        header.extend(predictions.iter().map(|(n, _)| n.clone()));
        if var_band.is_some() {
            header.extend(["var_lo95".into(), "var_hi95".into()]);
        }
        w.write_record(&header).map_err(csv_err)?;
        let var_pred = predictions.iter().find(|(n, _)| n == "var").map(|(_, m)| m);
        for (i, name) in frame.names().iter().enumerate() {
            for s in 0..actual.ncols() {
                let mut row = vec![(split.split_index + s).to_string(), name.clone(), format!("{}", actual[(i, s)])];
                row.extend(predictions.iter().map(|(_, m)| format!("{}", m[(i, s)])));
                if let (Some(sd), Some(vp)) = (&var_band, var_pred) {
                    let hw = Z_95 * sd[i];
                    row.push(format!("{}", vp[(i, s)] - hw));
                    row.push(format!("{}", vp[(i, s)] + hw));
                }
                w.write_record(&row).map_err(csv_err)?;
            }
        }
        w.flush().map_err(|e| Error::Csv(e.to_string()))
    })?;
    for t in &report.techniques {
        let rmse: Vec<String> = t.metrics.iter().map(|(v, s)| format!("{v}={:.4}", s.rmse)).collect();
        println!("{:<7} w={:<3} rmse {}", t.name, t.window, rmse.join(" "));
    }
    clock.finish(&mut out, (!timings.is_empty()).then_some(timings.as_slice()))
}
