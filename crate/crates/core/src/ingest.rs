//! Loading VoIP metric traces and the derived QoS/QoE quantities.
//!
//! Traces arrive as CSV with a header row and one time sample per line. A
//! [`Schema`] picks which columns become variables and in which order; the
//! result is a [`MetricFrame`] holding an N × L matrix (variables in rows,
//! samples in columns).

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Column holding an optional per-file sample period override, in seconds.
pub const SAMPLE_PERIOD_COLUMN: &str = "sample_period";

/// Canonical variable order of a six-metric VoIP trace.
pub const VOIP_COLUMNS: [&str; 6] = ["mos", "bw", "rtt", "jitter", "buffer", "snr"];

/// Aligned multivariate series: `data` is N variables × L samples.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricFrame {
    names: Vec<String>,
    units: Vec<String>,
    data: DMatrix<f64>,
    sample_period: f64,
}

impl MetricFrame {
    pub fn new(
        names: Vec<String>,
        units: Vec<String>,
        data: DMatrix<f64>,
        sample_period: f64,
    ) -> Result<Self> {
        let (n, l) = data.shape();
        if n == 0 || l == 0 {
            return Err(Error::InsufficientData { needed: 1, got: n.min(l) });
        }
        if names.len() != n {
            return Err(Error::LengthMismatch { left: names.len(), right: n });
        }
        if units.len() != n {
            return Err(Error::LengthMismatch { left: units.len(), right: n });
        }
        if let Some(idx) = data.iter().position(|v| !v.is_finite()) {
            let (row, col) = (idx % n, idx / n);
            return Err(Error::MissingValue { column: names[row].clone(), row: col });
        }
        if !(sample_period.is_finite() && sample_period > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sample period must be positive, got {sample_period}"
            )));
        }
        Ok(Self { names, units, data, sample_period })
    }

    /// Builds a frame from row-major series with default units, 1 s sampling.
    pub fn from_rows(names: &[&str], rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let l = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != l) {
            return Err(Error::LengthMismatch { left: bad.len(), right: l });
        }
        let data = DMatrix::from_fn(n, l, |i, t| rows[i][t]);
        Self::new(
            names.iter().map(|s| s.to_string()).collect(),
            names.iter().map(|s| default_unit(s).to_string()).collect(),
            data,
            1.0,
        )
    }

    pub fn n_vars(&self) -> usize {
        self.data.nrows()
    }

    pub fn len(&self) -> usize {
        self.data.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.data.ncols() == 0
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn units(&self) -> &[String] {
        &self.units
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn sample_period(&self) -> f64 {
        self.sample_period
    }

    /// One variable's series, copied out of the matrix.
    pub fn series(&self, var: usize) -> Vec<f64> {
        self.data.row(var).iter().copied().collect()
    }

    /// Observation vector at time index `t`.
    pub fn observation(&self, t: usize) -> Vec<f64> {
        self.data.column(t).iter().copied().collect()
    }

    /// Contiguous time slice `[start, end)` as a new frame.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.len() {
            return Err(Error::InvalidParameter(format!(
                "time slice {start}..{end} outside 0..{}",
                self.len()
            )));
        }
        Self::new(
            self.names.clone(),
            self.units.clone(),
            self.data.columns(start, end - start).into_owned(),
            self.sample_period,
        )
    }

    /// Appends `other` in time; variable sets must match.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        if self.names != other.names {
            return Err(Error::InvalidParameter("cannot join frames with different variables".into()));
        }
        let (n, a, b) = (self.n_vars(), self.len(), other.len());
        let data = DMatrix::from_fn(n, a + b, |i, t| {
            if t < a {
                self.data[(i, t)]
            } else {
                other.data[(i, t - a)]
            }
        });
        Self::new(self.names.clone(), self.units.clone(), data, self.sample_period)
    }

    /// Reorders variables; `order[k]` is the source index of new variable `k`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        check_permutation(order, self.n_vars())?;
        let data = DMatrix::from_fn(self.n_vars(), self.len(), |i, t| self.data[(order[i], t)]);
        Self::new(
            order.iter().map(|&i| self.names[i].clone()).collect(),
            order.iter().map(|&i| self.units[i].clone()).collect(),
            data,
            self.sample_period,
        )
    }

    /// Multiplies variable `var` by `factor`.
    pub fn scaled(&self, var: usize, factor: f64) -> Result<Self> {
        let mut data = self.data.clone();
        data.row_mut(var).scale_mut(factor);
        Self::new(self.names.clone(), self.units.clone(), data, self.sample_period)
    }
}

pub(crate) fn check_permutation(order: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if order.len() != n {
        return Err(Error::InvalidParameter(format!(
            "ordering has {} entries for {n} variables",
            order.len()
        )));
    }
    for &i in order {
        if i >= n || std::mem::replace(&mut seen[i], true) {
            return Err(Error::InvalidParameter(format!("ordering {order:?} is not a permutation")));
        }
    }
    Ok(())
}

/// Unit label for the well-known VoIP metric names.
pub fn default_unit(name: &str) -> &'static str {
    match name.to_ascii_lowercase().as_str() {
        "mos" => "1-5",
        "bw" | "bandwidth" => "kb/s",
        "rtt" | "jitter" | "buffer" => "ms",
        "snr" => "dB",
        _ => "",
    }
}

/// Train/test partition produced by [`split_70_30`].
#[derive(Debug, Clone, PartialEq)]
pub struct SplitFrame {
    pub train: MetricFrame,
    pub test: MetricFrame,
    pub split_index: usize,
}

/// Contiguous 70/30 split: the first `floor(0.7·L)` samples train.
pub fn split_70_30(frame: &MetricFrame) -> Result<SplitFrame> {
    let l = frame.len();
    if l < 10 {
        return Err(Error::InsufficientData { needed: 10, got: l });
    }
    let split_index = l * 7 / 10;
    Ok(SplitFrame {
        train: frame.slice(0, split_index)?,
        test: frame.slice(split_index, l)?,
        split_index,
    })
}

/// ITU-T G.107 E-model conversion from R-factor to MOS.
///
/// The cubic dips marginally below 1 for R < 6.5; the result is floored at 1
/// as in G.107, which keeps the map non-decreasing on `[0, 100]`.
pub fn mos_from_r(r: f64) -> Result<f64> {
    if !(0.0..=100.0).contains(&r) {
        return Err(Error::Domain(format!("R-factor {r} outside [0, 100]")));
    }
    let mos = 1.0 + 0.035 * r + 7e-6 * r * (r - 60.0) * (100.0 - r);
    Ok(mos.max(1.0))
}

/// Per-packet jitter `|(rx_n − tx_n) − (rx_{n−1} − tx_{n−1})|` in ms, from
/// transmit/receive timestamps in seconds.
pub fn jitter_series(tx_times: &[f64], rx_times: &[f64]) -> Result<Vec<f64>> {
    if tx_times.len() != rx_times.len() {
        return Err(Error::LengthMismatch { left: tx_times.len(), right: rx_times.len() });
    }
    if tx_times.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: tx_times.len() });
    }
    if tx_times.iter().chain(rx_times).any(|t| !t.is_finite()) {
        return Err(Error::Domain("timestamps must be finite".into()));
    }
    let transit: Vec<f64> = rx_times.iter().zip(tx_times).map(|(r, t)| r - t).collect();
    Ok(transit.windows(2).map(|w| (w[1] - w[0]).abs() * 1e3).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MissingPolicy {
    #[default]
    Reject,
    Interpolate,
}

impl std::str::FromStr for MissingPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reject" => Ok(Self::Reject),
            "interpolate" => Ok(Self::Interpolate),
            other => Err(Error::InvalidParameter(format!(
                "unknown missing-value policy `{other}` (expected reject|interpolate)"
            ))),
        }
    }
}

/// One CSV column mapped onto a frame variable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub column: String,
    pub name: String,
    pub unit: String,
}

/// Ordered column → variable mapping.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub columns: Vec<ColumnSpec>,
}

impl Schema {
    /// Maps each header name to a variable of the same name.
    pub fn from_columns<S: AsRef<str>>(columns: &[S]) -> Self {
        Self {
            columns: columns
                .iter()
                .map(|c| {
                    let c = c.as_ref().trim();
                    ColumnSpec { column: c.into(), name: c.into(), unit: default_unit(c).into() }
                })
                .collect(),
        }
    }

    pub fn voip() -> Self {
        Self::from_columns(&VOIP_COLUMNS)
    }
}

fn is_missing_token(s: &str) -> bool {
    matches!(s, "" | "na" | "NA" | "nan" | "NaN" | "NAN" | "null")
}

/// Loads the mapped columns of a CSV file.
pub fn load_csv(path: impl AsRef<Path>, schema: &Schema, policy: MissingPolicy) -> Result<MetricFrame> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io { path: path.into(), source })?;
    let meta = file.metadata().map_err(|source| Error::Io { path: path.into(), source })?;
    if meta.len() == 0 {
        return Err(Error::EmptyFile { path: path.into() });
    }
    read_csv(file, schema, policy)
}

/// Parses CSV from any reader; see [`load_csv`].
pub fn read_csv<R: Read>(reader: R, schema: &Schema, policy: MissingPolicy) -> Result<MetricFrame> {
    if schema.columns.is_empty() {
        return Err(Error::InvalidParameter("schema maps no columns".into()));
    }
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers().map_err(|e| Error::Csv(e.to_string()))?.clone();
    let index_of = |name: &str| header.iter().position(|h| h == name);
    let idx: Vec<usize> = schema
        .columns
        .iter()
        .map(|c| index_of(&c.column).ok_or_else(|| Error::MissingColumn(c.column.clone())))
        .collect::<Result<_>>()?;
    let period_idx = index_of(SAMPLE_PERIOD_COLUMN);

    let n = idx.len();
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); n];
    let mut period = None;
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Csv(e.to_string()))?;
        for (v, &ci) in idx.iter().enumerate() {
            let raw = rec.get(ci).unwrap_or("");
            let value = if is_missing_token(raw) {
                match policy {
                    MissingPolicy::Reject => {
                        return Err(Error::MissingValue { column: schema.columns[v].column.clone(), row })
                    }
                    MissingPolicy::Interpolate => f64::NAN,
                }
            } else {
                match raw.parse::<f64>() {
                    Ok(x) if x.is_finite() => x,
                    _ => {
                        return Err(Error::NonNumeric {
                            column: schema.columns[v].column.clone(),
                            row,
                            value: raw.into(),
                        })
                    }
                }
            };
            cols[v].push(value);
        }
        if period.is_none() {
            if let Some(p) = period_idx.and_then(|pi| rec.get(pi)).and_then(|s| s.parse::<f64>().ok()) {
                period = Some(p);
            }
        }
    }

    let l = cols[0].len();
    if l < 2 {
        return Err(Error::InsufficientData { needed: 2, got: l });
    }
    for (v, col) in cols.iter_mut().enumerate() {
        if !interpolate_gaps(col) {
            return Err(Error::MissingValue { column: schema.columns[v].column.clone(), row: 0 });
        }
    }
    let data = DMatrix::from_fn(n, l, |i, t| cols[i][t]);
    MetricFrame::new(
        schema.columns.iter().map(|c| c.name.clone()).collect(),
        schema.columns.iter().map(|c| c.unit.clone()).collect(),
        data,
        period.unwrap_or(1.0),
    )
}

/// Fills NaN gaps linearly between the nearest valid neighbours; leading and
/// trailing gaps copy the nearest valid value. Returns false if no value is
/// valid.
fn interpolate_gaps(xs: &mut [f64]) -> bool {
    let valid: Vec<usize> = (0..xs.len()).filter(|&i| xs[i].is_finite()).collect();
    let (Some(&first), Some(&last)) = (valid.first(), valid.last()) else {
        return false;
    };
    for i in 0..first {
        xs[i] = xs[first];
    }
    for i in last + 1..xs.len() {
        xs[i] = xs[last];
    }
    for w in valid.windows(2) {
        let (a, b) = (w[0], w[1]);
        let span = (b - a) as f64;
        for i in a + 1..b {
            let frac = (i - a) as f64 / span;
            xs[i] = xs[a] + frac * (xs[b] - xs[a]);
        }
    }
    true
}

/// Writes a frame as CSV with one column per variable.
pub fn write_csv(frame: &MetricFrame, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|source| Error::Io { path: path.into(), source })?;
    write_csv_to(frame, file)
}

pub fn write_csv_to<W: Write>(frame: &MetricFrame, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(frame.names()).map_err(|e| Error::Csv(e.to_string()))?;
    for t in 0..frame.len() {
        // `{}` on f64 prints the shortest representation that parses back exactly.
        w.write_record(frame.data().column(t).iter().map(|v| format!("{v}")))
            .map_err(|e| Error::Csv(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Csv(e.to_string()))
}
