//! Command-line arguments and the hashed run configuration.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};
use varcast_core::diagnostics::AdfSpec;
use varcast_core::ingest::VOIP_COLUMNS;
use varcast_core::MissingPolicy;

#[derive(Debug, Parser)]
#[command(name = "varcast", version, about = "VAR diagnostics and forecast benchmarking for VoIP QoS/QoE series")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// AIC scan, LM/ES residual tests, ADF, CUSUM and stability.
    Diagnose(DiagnoseArgs),
    /// Estimate a VAR and write it as JSON.
    Fit(FitArgs),
    /// Multi-step VAR forecast with 95% bands.
    Forecast(ForecastArgs),
    /// Orthogonal impulse responses with bootstrap bands.
    Oirf(OirfArgs),
    /// 70/30 rolling one-step comparison of VAR and learners.
    Compare(CompareArgs),
}

/// `auto` or a fixed positive integer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Choice {
    Auto,
    Fixed(usize),
}

impl FromStr for Choice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Self::Auto);
        }
        match s.parse::<usize>() {
            Ok(v) if v >= 1 => Ok(Self::Fixed(v)),
            _ => Err(format!("expected `auto` or a positive integer, got `{s}`")),
        }
    }
}

impl fmt::Display for Choice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Auto => f.write_str("auto"),
            Self::Fixed(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// CSV file with a header row.
    #[arg(long)]
    pub input: PathBuf,
    /// Comma-separated header names to load, in model order.
    #[arg(long, value_delimiter = ',', default_values_t = VOIP_COLUMNS.map(String::from))]
    pub columns: Vec<String>,
    /// reject | interpolate
    #[arg(long, default_value = "reject")]
    pub missing: MissingPolicy,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Output directory (created if needed).
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct LagArgs {
    /// VAR lag order: `auto` (AIC) or an integer.
    #[arg(long, default_value = "auto")]
    pub p: Choice,
    /// Largest lag in the AIC scan.
    #[arg(long, default_value_t = 15)]
    pub p_max: usize,
}

#[derive(Debug, Clone, Args)]
pub struct DiagnoseArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub lag: LagArgs,
    /// Largest residual lag for the LM/ES tests.
    #[arg(long, default_value_t = 10)]
    pub h: usize,
    /// Lag orders for LM/ES (default: the two best by AIC).
    #[arg(long, value_delimiter = ',')]
    pub test_lags: Option<Vec<usize>>,
    /// ADF deterministic terms: c | ct
    #[arg(long, default_value = "c")]
    pub adf_spec: AdfSpec,
    /// ADF augmentation lag (default: the AIC lag).
    #[arg(long)]
    pub adf_lags: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub lag: LagArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ForecastArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub lag: LagArgs,
    /// Model JSON from `fit`; estimated from the input when omitted.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub horizon: usize,
}

#[derive(Debug, Clone, Args)]
pub struct OirfArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub lag: LagArgs,
    /// Model JSON from `fit`; its residuals are re-evaluated on the input.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, default_value_t = 25)]
    pub horizon: usize,
    /// Bootstrap replicates; 0 disables the bands.
    #[arg(long, default_value_t = 200)]
    pub reps: usize,
    /// Permit 1..99 replicates.
    #[arg(long)]
    pub allow_few_reps: bool,
    /// Cholesky ordering as comma-separated variable names (default: column order).
    #[arg(long, value_delimiter = ',')]
    pub ordering: Option<Vec<String>>,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub lag: LagArgs,
    /// Techniques: var, linear, forest, mlp.
    #[arg(long, value_delimiter = ',', default_values_t = ["var", "linear", "forest", "mlp"].map(String::from))]
    pub learners: Vec<String>,
    /// Learner window: `auto` (the VAR lag) or an integer.
    #[arg(long, default_value = "auto")]
    pub window: Choice,
    /// Timed repetitions per technique (at least 3; 0 skips timing).
    #[arg(long, default_value_t = 3)]
    pub timing_reps: usize,
    /// Flow identifier for the report (default: input file stem).
    #[arg(long)]
    pub flow_id: Option<String>,
    #[arg(long, default_value = "")]
    pub codec: String,
}

/// Everything that determines a run's outputs. The output directory is left
/// out so identical runs into different directories share a hash.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: &'static str,
    pub input_sha256: String,
    pub columns: Vec<String>,
    pub missing: String,
    pub seed: u64,
    pub p: Choice,
    pub p_max: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model_sha256: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<Choice>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub learners: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub adf_spec: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub adf_lags: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test_lags: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ordering: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing_reps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flow_id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub codec: Option<String>,
}

impl RunConfig {
    pub fn new(command: &'static str, data: &DataArgs, common: &CommonArgs, lag: &LagArgs, input_sha256: String) -> Self {
        Self {
            command,
            input_sha256,
            columns: data.columns.clone(),
            missing: format!("{:?}", data.missing).to_lowercase(),
            seed: common.seed,
            p: lag.p,
            p_max: lag.p_max,
            model_sha256: None,
            window: None,
            learners: None,
            horizon: None,
            reps: None,
            adf_spec: None,
            adf_lags: None,
            h: None,
            test_lags: None,
            ordering: None,
            timing_reps: None,
            flow_id: None,
            codec: None,
        }
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serialises");
        sha256_hex(&json)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
