//! Characterisation and forecasting of multivariate VoIP quality time series.
//!
//! The crate covers the whole statistical pipeline for traces of MOS,
//! bandwidth, round-trip time, jitter, buffer size and SNR:
//!
//! - [`ingest`]: CSV loading into a [`MetricFrame`], 70/30 splits, MOS and
//!   jitter helpers.
//! - [`varmodel`]: VAR(p) estimation, stability and forecasting.
//! - [`diagnostics`]: AIC lag selection, LM / Edgerton-Shukur, ADF, CUSUM.
//! - [`oirf`]: orthogonalised impulse responses with bootstrap bands.
//! - [`learners`]: sliding-window ridge, random forest and perceptron.
//! - [`evaluate`]: RMSE / MAE / MAPE scoring, timing and reports.
//!
//! Randomness is always drawn from [`rng::substream`], and the data-parallel
//! loops honour an [`Exec`] strategy, so results depend only on the seed.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod evaluate;
pub mod exec;
pub mod ingest;
pub mod learners;
pub mod linalg;
pub mod oirf;
pub mod rng;
pub mod sim;
pub mod varmodel;

pub use error::{Error, Result};
pub use exec::Exec;
pub use ingest::{load_csv, split_70_30, MetricFrame, MissingPolicy, Schema, SplitFrame};
pub use varmodel::{fit_var, forecast, rolling_one_step, OneStepForecaster, VarModel};
