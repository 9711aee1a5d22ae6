//! Sweep orchestration and figure-data emission.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::{alpha_ccdf, BlockageParams, ChannelConfig};
use crate::closed_forms::{
    ergodic_capacity, outage_capacity, ts_ergodic_rate, two_tx_alamouti_rate,
};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::schemes::{
    ergodic_estimate, outage_estimate, rate_samples, Sampling, SchemeKind, SchemeSpec,
};
use crate::stats::ccdf_points;

pub const CSV_HEADER: &str = "axis,axis_value,scheme,metric,rate_bits,std_error,n_trials,argmax_i";
pub const CCDF_HEADER: &str = "series,rate_bits,ccdf";

pub const DEFAULT_ERGODIC_TRIALS: usize = 100_000;
pub const DEFAULT_OUTAGE_TRIALS: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    #[serde(rename = "p_b")]
    BlockageProb,
    #[serde(rename = "snr_db")]
    SnrDb,
    #[serde(rename = "l")]
    Transmitters,
    #[serde(rename = "k")]
    Frames,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::BlockageProb => "p_b",
            Axis::SnrDb => "snr_db",
            Axis::Transmitters => "l",
            Axis::Frames => "k",
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Axis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "p_b" | "pb" => Ok(Axis::BlockageProb),
            "snr_db" | "snr" => Ok(Axis::SnrDb),
            "l" => Ok(Axis::Transmitters),
            "k" => Ok(Axis::Frames),
            other => Err(Error::Config(format!("unknown axis `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Ergodic,
    Outage,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Ergodic => "ergodic",
            Metric::Outage => "outage",
        }
    }
}

impl FromStr for Metric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ergodic" => Ok(Metric::Ergodic),
            "outage" => Ok(Metric::Outage),
            other => Err(Error::Config(format!("unknown metric `{other}`"))),
        }
    }
}

/// Parameters held fixed while the sweep axis varies.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedParams {
    pub l: usize,
    pub p_b: f64,
    pub snr_db: f64,
    pub k: usize,
    pub d: usize,
}

impl Default for FixedParams {
    fn default() -> Self {
        Self {
            l: 4,
            p_b: 0.2,
            snr_db: 10.0,
            k: 16,
            d: 4,
        }
    }
}

impl FixedParams {
    pub fn validate(&self) -> Result<()> {
        if self.l == 0 {
            return Err(Error::Config("L must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.p_b) {
            return Err(Error::Config(format!(
                "p_b = {} is outside [0, 1]",
                self.p_b
            )));
        }
        if !self.snr_db.is_finite() {
            return Err(Error::Config("SNR must be finite".into()));
        }
        if self.k == 0 {
            return Err(Error::Config("K must be at least 1".into()));
        }
        Ok(())
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub axis: Axis,
    pub axis_values: Vec<f64>,
    pub fixed: FixedParams,
    pub schemes: Vec<SchemeKind>,
    pub metrics: Vec<Metric>,
    /// overrides both default trial counts when set
    pub n_trials: Option<usize>,
    pub seed: u64,
    pub sampling: Sampling,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        self.fixed.validate()?;
        if self.axis_values.is_empty() {
            return Err(Error::Config("axis values must not be empty".into()));
        }
        if self.axis_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(
                "axis values must be strictly increasing".into(),
            ));
        }
        if self.schemes.is_empty() {
            return Err(Error::Config("no schemes selected".into()));
        }
        if self.metrics.is_empty() {
            return Err(Error::Config("no metrics selected".into()));
        }
        if self.n_trials == Some(0) {
            return Err(Error::Config("trial count must be positive".into()));
        }
        let integral = matches!(self.axis, Axis::Transmitters | Axis::Frames);
        for &v in &self.axis_values {
            let ok = match self.axis {
                Axis::BlockageProb => v > 0.0 && v < 1.0,
                Axis::SnrDb => v.is_finite(),
                _ => v >= 1.0 && v.fract() == 0.0,
            };
            if !ok {
                let kind = if integral {
                    "a positive integer"
                } else {
                    "in range"
                };
                return Err(Error::Config(format!(
                    "axis value {v} for {} is not {kind}",
                    self.axis
                )));
            }
        }
        Ok(())
    }

    /// Fixed parameters with the axis coordinate substituted.
    pub fn point(&self, value: f64) -> FixedParams {
        let mut p = self.fixed;
        match self.axis {
            Axis::BlockageProb => p.p_b = value,
            Axis::SnrDb => p.snr_db = value,
            Axis::Transmitters => p.l = value as usize,
            Axis::Frames => p.k = value as usize,
        }
        p
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub axis: String,
    pub axis_value: f64,
    pub scheme: String,
    pub metric: String,
    pub rate_bits: f64,
    pub std_error: f64,
    /// zero for closed-form rows
    pub n_trials: usize,
    pub argmax_i: Option<usize>,
}

/// A sweep cell that could not be evaluated.
#[derive(Clone, Debug, PartialEq)]
pub struct SkippedRow {
    pub axis_value: f64,
    pub scheme: String,
    pub metric: String,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SweepOutput {
    pub rows: Vec<ResultRow>,
    pub skipped: Vec<SkippedRow>,
}

struct Cell {
    rate: f64,
    std_error: f64,
    n_trials: usize,
    argmax: Option<usize>,
}

fn channel_for(p: &FixedParams) -> Result<ChannelConfig> {
    ChannelConfig::new(
        p.l,
        db_to_linear(p.snr_db),
        BlockageParams::from_blockage_prob(p.p_b)?,
        p.k.max(1),
    )
}

fn evaluate(
    kind: &SchemeKind,
    metric: Metric,
    p: &FixedParams,
    trials: Option<usize>,
    sampling: Sampling,
    stream: &RngStream,
) -> Result<Cell> {
    let cfg = channel_for(p)?;
    let (l, p_b, snr) = (cfg.l, p.p_b, cfg.snr);
    let closed = |rate: f64, argmax| {
        Ok(Cell {
            rate,
            std_error: 0.0,
            n_trials: 0,
            argmax,
        })
    };
    match (kind, metric) {
        (SchemeKind::Capacity, Metric::Ergodic) => {
            closed(ergodic_capacity(l, p_b, snr).bits(), None)
        }
        (SchemeKind::Capacity, Metric::Outage) => {
            let s = outage_capacity(l, p_b, snr);
            closed(s.rate.bits(), Some(s.argmax_index))
        }
        (SchemeKind::TransmitterSelection, Metric::Ergodic) => {
            closed(ts_ergodic_rate(l, p_b, snr).bits(), None)
        }
        // constant rate whenever any link is up
        (SchemeKind::TransmitterSelection, Metric::Outage) => {
            closed(ts_ergodic_rate(l, p_b, snr).bits(), Some(1))
        }
        (SchemeKind::TwoTxSelection, Metric::Ergodic) => {
            closed(two_tx_alamouti_rate(l, p_b, snr)?.bits(), None)
        }
        (SchemeKind::TwoTxSelection, Metric::Outage) => {
            two_tx_alamouti_rate(l, p_b, snr)?;
            let ccdf = alpha_ccdf(l, p_b);
            let one = ccdf[1] * (1.0 + snr).log2();
            let two = ccdf[2] * (1.0 + 2.0 * snr).log2();
            if two > one {
                closed(two, Some(2))
            } else {
                closed(one, Some(1))
            }
        }
        (kind, metric) => {
            let spec = SchemeSpec::new(kind.with_frames(p.k, l), cfg)?;
            match metric {
                Metric::Ergodic => {
                    let n = trials.unwrap_or(DEFAULT_ERGODIC_TRIALS);
                    let e = ergodic_estimate(&spec, n, stream, sampling)?;
                    Ok(Cell {
                        rate: e.value(),
                        std_error: e.std_error,
                        n_trials: e.n_trials,
                        argmax: None,
                    })
                }
                Metric::Outage => {
                    let n = trials.unwrap_or(DEFAULT_OUTAGE_TRIALS);
                    let o = outage_estimate(&spec, n, stream)?;
                    Ok(Cell {
                        rate: o.rate.bits(),
                        std_error: o.std_error,
                        n_trials: n,
                        argmax: None,
                    })
                }
            }
        }
    }
}

/// One row per (axis value, scheme, metric), in that nesting order.
///
/// Cell `j` draws from stream `(seed, j)`, so results do not depend on how
/// the trials are spread over workers.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepOutput> {
    config.validate()?;
    let mut out = SweepOutput::default();
    let mut cell_id = 0u64;
    for &value in &config.axis_values {
        let point = config.point(value);
        for kind in &config.schemes {
            for &metric in &config.metrics {
                let stream = RngStream::new(config.seed, cell_id);
                cell_id += 1;
                match evaluate(
                    kind,
                    metric,
                    &point,
                    config.n_trials,
                    config.sampling,
                    &stream,
                ) {
                    Ok(cell) => out.rows.push(ResultRow {
                        axis: config.axis.name().into(),
                        axis_value: value,
                        scheme: kind.name().into(),
                        metric: metric.name().into(),
                        rate_bits: cell.rate,
                        std_error: cell.std_error,
                        n_trials: cell.n_trials,
                        argmax_i: cell.argmax,
                    }),
                    Err(e) => out.skipped.push(SkippedRow {
                        axis_value: value,
                        scheme: kind.name().into(),
                        metric: metric.name().into(),
                        reason: e.to_string(),
                    }),
                }
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CcdfRow {
    pub series: String,
    pub rate_bits: f64,
    pub ccdf: f64,
}

/// Keep at most `max_points` of a step function, always including both ends.
fn thin(points: Vec<(f64, f64)>, max_points: usize) -> Vec<(f64, f64)> {
    if points.len() <= max_points || max_points < 2 {
        return points;
    }
    let last = points.len() - 1;
    let mut idx: Vec<usize> = (0..max_points)
        .map(|j| j * last / (max_points - 1))
        .collect();
    idx.dedup();
    idx.into_iter().map(|i| points[i]).collect()
}

/// Empirical CCDFs of the instantaneous rate per scheme, plus the analytic
/// steps `(log2(1 + iP), P(α ≥ i))` of the instantaneous capacity.
pub fn run_ccdf(
    point: &FixedParams,
    schemes: &[SchemeKind],
    n: usize,
    seed: u64,
    max_points: usize,
) -> Result<Vec<CcdfRow>> {
    let cfg = channel_for(point)?;
    let mut rows = Vec::new();
    for (j, kind) in schemes.iter().enumerate() {
        let spec = SchemeSpec::new(kind.with_frames(point.k, cfg.l), cfg)?;
        let series = match kind {
            SchemeKind::PhaseDiversity { .. }
            | SchemeKind::Ncja { .. }
            | SchemeKind::CyclicDelayDiversity { .. } => {
                format!("{}_k{}", kind.name(), point.k)
            }
            _ => kind.name().to_string(),
        };
        let samples = rate_samples(&spec, n, &RngStream::new(seed, j as u64))?;
        for (r, c) in thin(ccdf_points(&samples)?, max_points) {
            rows.push(CcdfRow {
                series: series.clone(),
                rate_bits: r,
                ccdf: c,
            });
        }
    }
    let ccdf = alpha_ccdf(cfg.l, point.p_b);
    rows.push(CcdfRow {
        series: "analytic_steps".into(),
        rate_bits: 0.0,
        ccdf: 1.0,
    });
    for (i, &tail) in ccdf.iter().enumerate().skip(1) {
        rows.push(CcdfRow {
            series: "analytic_steps".into(),
            rate_bits: (1.0 + i as f64 * cfg.snr).log2(),
            ccdf: tail,
        });
    }
    Ok(rows)
}

/// `x` with nine significant digits, positional notation where practical.
pub fn format_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0.00000000".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    if !(-5..9).contains(&exp) {
        return format!("{x:.8e}");
    }
    let decimals = (8 - exp).max(0) as usize;
    let s = format!("{x:.decimals$}");
    // rounding may carry into a new leading digit
    let digits = s.chars().filter(|c| c.is_ascii_digit()).collect::<String>();
    let significant = digits.trim_start_matches('0').len();
    if significant > 9 && decimals > 0 {
        let d = decimals - 1;
        format!("{x:.d$}")
    } else {
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::Config(format!("unknown format `{other}`"))),
        }
    }
}

pub fn rows_to_csv(rows: &[ResultRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.axis,
            format_sig9(r.axis_value),
            r.scheme,
            r.metric,
            format_sig9(r.rate_bits),
            format_sig9(r.std_error),
            r.n_trials,
            r.argmax_i.map(|i| i.to_string()).unwrap_or_default()
        ));
    }
    out
}

fn parse_f64(field: &str, line: usize) -> Result<f64> {
    field
        .parse()
        .map_err(|_| Error::Parse(format!("line {line}: bad number `{field}`")))
}

pub fn parse_csv(text: &str) -> Result<Vec<ResultRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        other => return Err(Error::Parse(format!("unexpected header {other:?}"))),
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let n = i + 2;
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 8 {
                return Err(Error::Parse(format!(
                    "line {n}: expected 8 fields, got {}",
                    f.len()
                )));
            }
            Ok(ResultRow {
                axis: f[0].into(),
                axis_value: parse_f64(f[1], n)?,
                scheme: f[2].into(),
                metric: f[3].into(),
                rate_bits: parse_f64(f[4], n)?,
                std_error: parse_f64(f[5], n)?,
                n_trials: f[6]
                    .parse()
                    .map_err(|_| Error::Parse(format!("line {n}: bad count `{}`", f[6])))?,
                argmax_i: if f[7].is_empty() {
                    None
                } else {
                    Some(
                        f[7].parse()
                            .map_err(|_| Error::Parse(format!("line {n}: bad index `{}`", f[7])))?,
                    )
                },
            })
        })
        .collect()
}

pub fn ccdf_to_csv(rows: &[CcdfRow]) -> String {
    let mut out = String::from(CCDF_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{}\n",
            r.series,
            format_sig9(r.rate_bits),
            format_sig9(r.ccdf)
        ));
    }
    out
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text.as_bytes())?;
    Ok(())
}

pub fn emit(rows: &[ResultRow], format: Format, path: &Path) -> Result<()> {
    match format {
        Format::Csv => write_text(path, &rows_to_csv(rows)),
        Format::Json => write_text(path, &(serde_json::to_string_pretty(rows)? + "\n")),
    }
}

pub fn emit_ccdf(rows: &[CcdfRow], format: Format, path: &Path) -> Result<()> {
    match format {
        Format::Csv => write_text(path, &ccdf_to_csv(rows)),
        Format::Json => write_text(path, &(serde_json::to_string_pretty(rows)? + "\n")),
    }
}

/// Flat key-value run configuration, read from a TOML file.
///
/// Every key is optional; command-line flags take precedence.
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunFile {
    pub axis: Option<String>,
    pub values: Option<Vec<f64>>,
    pub snr_db: Option<f64>,
    pub pb: Option<f64>,
    pub l: Option<usize>,
    pub k: Option<usize>,
    pub d: Option<usize>,
    pub schemes: Option<Vec<String>>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub metric: Option<String>,
    pub out: Option<String>,
    pub format: Option<String>,
    pub workers: Option<usize>,
    pub stratified: Option<bool>,
}

impl RunFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }
}

/// Comma-separated scheme list.
pub fn parse_schemes(list: &str) -> Result<Vec<SchemeKind>> {
    list.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(str::parse)
        .collect()
}

/// `ergodic`, `outage` or `both`.
pub fn parse_metrics(s: &str) -> Result<Vec<Metric>> {
    if s.trim().eq_ignore_ascii_case("both") {
        Ok(vec![Metric::Ergodic, Metric::Outage])
    } else {
        s.split(',').map(str::parse).collect()
    }
}

/// Default grid per axis.
pub fn default_axis_values(axis: Axis) -> Vec<f64> {
    match axis {
        Axis::BlockageProb => vec![0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5],
        Axis::SnrDb => (-1..=5).map(|i| 5.0 * i as f64).collect(),
        Axis::Transmitters => (1..=16).map(f64::from).collect(),
        Axis::Frames => vec![1.0, 4.0, 16.0, 64.0],
    }
}
