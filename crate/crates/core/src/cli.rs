//! Batch front end: JSON run configuration, report generation and exit codes.

use std::fmt;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::Error;
use crate::params::{self, CheckedParams, PhysicalParams};
use crate::resonance::{self, ResonanceParams};
use crate::scaling::ScalingFrame;
use crate::tdse::{self, IntegrityReport, OracleRun, OracleSettings, SolverSettings};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Analytic,
    Oracle,
    Compare,
    Sweep,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Analytic => "analytic",
            Mode::Oracle => "oracle",
            Mode::Compare => "compare",
            Mode::Sweep => "sweep",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Parameters a sweep can vary.
pub const SWEEP_PARAMETERS: [&str; 9] = [
    "mu",
    "hbar",
    "u0_bar",
    "v2_offset",
    "a_bar",
    "r0",
    "v",
    "v0_override",
    "n",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub parameter: String,
    pub values: Vec<f64>,
}

fn one() -> f64 {
    1.0
}
fn default_samples() -> usize {
    200
}
fn default_points() -> usize {
    SolverSettings::default().n_points
}
fn default_pad() -> f64 {
    SolverSettings::default().pad
}
fn default_w_over_dx() -> f64 {
    SolverSettings::default().w_over_dx
}
fn default_dt_divisor() -> f64 {
    SolverSettings::default().dt_divisor
}

/// On-disk layout of a configuration document.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    mode: Option<Mode>,
    #[serde(default = "one")]
    mu: f64,
    #[serde(default = "one")]
    hbar: f64,
    u0_bar: f64,
    v2_offset: f64,
    a_bar: f64,
    r0: f64,
    v: f64,
    #[serde(default)]
    v0_override: Option<f64>,
    n: u32,
    t_final: f64,
    #[serde(default = "default_samples")]
    sample_count: usize,
    #[serde(default = "default_points")]
    n_points: usize,
    #[serde(default = "default_pad")]
    pad: f64,
    #[serde(default = "default_w_over_dx")]
    w_over_dx: f64,
    #[serde(default = "default_dt_divisor")]
    dt_divisor: f64,
    #[serde(default)]
    fit_window: Option<[f64; 2]>,
    #[serde(default)]
    include_channel2: bool,
    #[serde(default)]
    sweep: Option<SweepAxis>,
    #[serde(default)]
    out: Option<PathBuf>,
    #[serde(default)]
    format: Format,
}

/// Validated run configuration with every default filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub params: PhysicalParams,
    pub n: u32,
    pub t_final: f64,
    pub sample_count: usize,
    pub solver: SolverSettings,
    pub fit_window: Option<(f64, f64)>,
    pub include_channel2: bool,
    pub sweep: Option<SweepAxis>,
    pub out: Option<PathBuf>,
    pub format: Format,
}

impl RunConfig {
    pub fn oracle_settings(&self) -> OracleSettings {
        OracleSettings {
            n: self.n,
            t_final: self.t_final,
            sample_count: self.sample_count,
            solver: self.solver,
            fit_window: self.fit_window,
            include_channel2: self.include_channel2,
        }
    }

    pub fn checked_params(&self) -> Result<CheckedParams, ConfigError> {
        params::validate(self.params, self.t_final).map_err(|e| ConfigError::from_physics(&e))
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("parse error{}: {message} (line {line}, column {column})", key_suffix(.key))]
    Parse {
        key: Option<String>,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid value for `{key}`: {message}")]
    Validation { key: String, message: String },
}

fn key_suffix(key: &Option<String>) -> String {
    key.as_ref().map(|k| format!(" at `{k}`")).unwrap_or_default()
}

impl ConfigError {
    fn validation(key: &str, message: impl Into<String>) -> Self {
        ConfigError::Validation {
            key: key.to_string(),
            message: message.into(),
        }
    }

    fn from_physics(err: &Error) -> Self {
        let key = match err {
            Error::NonPositiveParameter { name, .. } => (*name).to_string(),
            Error::NonPositiveScale { .. } => "v".to_string(),
            Error::OpenChannel { .. } => "v2_offset".to_string(),
            Error::UnderResolved { .. } => "n_points".to_string(),
            Error::InsufficientSamples { .. } => "sample_count".to_string(),
            _ => "config".to_string(),
        };
        ConfigError::validation(&key, err.to_string())
    }

    fn from_serde(err: &serde_json::Error) -> Self {
        let message = err.to_string();
        // serde names the offending key in backticks for unknown/missing fields
        let key = ["unknown field `", "missing field `"].iter().find_map(|marker| {
            let start = message.find(marker)? + marker.len();
            let len = message[start..].find('`')?;
            Some(message[start..start + len].to_string())
        });
        let message = match message.rfind(" at line ") {
            Some(pos) => message[..pos].to_string(),
            None => message,
        };
        ConfigError::Parse {
            key,
            line: err.line(),
            column: err.column(),
            message,
        }
    }
}

/// Parse a JSON document into a validated [`RunConfig`].
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    parse_config_with(text, &[])
}

/// Parse a JSON document and apply `key=value` overrides (overrides win).
///
/// Keys may be dotted (`sweep.parameter`). Values are read as JSON when they
/// parse, and as plain strings otherwise.
pub fn parse_config_with(text: &str, overrides: &[(String, String)]) -> Result<RunConfig, ConfigError> {
    let raw: RawConfig = if overrides.is_empty() {
        serde_json::from_str(text).map_err(|e| ConfigError::from_serde(&e))?
    } else {
        let mut doc: Value = serde_json::from_str(text).map_err(|e| ConfigError::from_serde(&e))?;
        for (key, value) in overrides {
            set_path(&mut doc, key, parse_override(value))?;
        }
        serde_json::from_value(doc).map_err(|e| {
            let mut err = ConfigError::from_serde(&e);
            if let ConfigError::Parse { message, .. } = &mut err {
                message.push_str(" (after --set overrides)");
            }
            err
        })?
    };
    validate_raw(raw)
}

fn parse_override(value: &str) -> Value {
    serde_json::from_str(value).unwrap_or_else(|_| Value::String(value.to_string()))
}

fn set_path(doc: &mut Value, key: &str, value: Value) -> Result<(), ConfigError> {
    let mut node = doc;
    let mut parts = key.split('.').peekable();
    while let Some(part) = parts.next() {
        if part.is_empty() {
            return Err(ConfigError::validation(key, "empty key segment"));
        }
        let map: &mut Map<String, Value> = match node {
            Value::Object(map) => map,
            _ => return Err(ConfigError::validation(key, "override path crosses a non-object value")),
        };
        if parts.peek().is_none() {
            map.insert(part.to_string(), value);
            return Ok(());
        }
        node = map
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Map::new()));
    }
    Err(ConfigError::validation(key, "empty override key"))
}

fn validate_raw(raw: RawConfig) -> Result<RunConfig, ConfigError> {
    let mode = raw
        .mode
        .ok_or_else(|| ConfigError::validation("mode", "missing; use analytic, oracle, compare or sweep"))?;
    let require = |ok: bool, key: &str, message: &str| -> Result<(), ConfigError> {
        if ok {
            Ok(())
        } else {
            Err(ConfigError::validation(key, message))
        }
    };
    require(raw.n >= 1, "n", "resonance index must be at least 1")?;
    require(raw.t_final.is_finite() && raw.t_final > 0.0, "t_final", "must be positive")?;
    require(raw.sample_count >= 1, "sample_count", "must be at least 1")?;
    require(raw.n_points >= 3, "n_points", "must be at least 3")?;
    require(raw.pad > 1.0, "pad", "must exceed 1")?;
    require(raw.w_over_dx >= 2.0, "w_over_dx", "coupling width must span at least two grid spacings")?;
    require(raw.dt_divisor > 0.0, "dt_divisor", "must be positive")?;
    if let Some([lo, hi]) = raw.fit_window {
        require(lo.is_finite() && hi.is_finite() && lo < hi, "fit_window", "needs finite lo < hi")?;
    }

    match (&raw.sweep, mode) {
        (None, Mode::Sweep) => return Err(ConfigError::validation("sweep", "sweep mode requires an axis")),
        (Some(axis), _) => {
            require(
                SWEEP_PARAMETERS.contains(&axis.parameter.as_str()),
                "sweep.parameter",
                &format!("unknown parameter `{}`; expected one of {}", axis.parameter, SWEEP_PARAMETERS.join(", ")),
            )?;
            require(!axis.values.is_empty(), "sweep.values", "needs at least one value")?;
            require(axis.values.iter().all(|v| v.is_finite()), "sweep.values", "values must be finite")?;
        }
        (None, _) => {}
    }

    let config = RunConfig {
        mode,
        params: PhysicalParams {
            mu: raw.mu,
            hbar: raw.hbar,
            u0_bar: raw.u0_bar,
            v2_offset: raw.v2_offset,
            a_bar: raw.a_bar,
            r0: raw.r0,
            v: raw.v,
            v0_override: raw.v0_override,
        },
        n: raw.n,
        t_final: raw.t_final,
        sample_count: raw.sample_count,
        solver: SolverSettings {
            n_points: raw.n_points,
            pad: raw.pad,
            w_over_dx: raw.w_over_dx,
            dt_divisor: raw.dt_divisor,
        },
        fit_window: raw.fit_window.map(|[lo, hi]| (lo, hi)),
        include_channel2: raw.include_channel2,
        sweep: raw.sweep,
        out: raw.out,
        format: raw.format,
    };
    config.checked_params()?;
    Ok(config)
}

/// Failure classes mapped onto process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureKind {
    Validation,
    Integrity,
    Io,
    Internal,
}

impl FailureKind {
    pub fn exit_code(self) -> i32 {
        match self {
            FailureKind::Validation => 2,
            FailureKind::Integrity => 3,
            FailureKind::Io | FailureKind::Internal => 1,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            FailureKind::Validation => "validation",
            FailureKind::Integrity => "integrity",
            FailureKind::Io => "io",
            FailureKind::Internal => "internal",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunError {
    pub kind: FailureKind,
    pub message: String,
}

impl RunError {
    pub fn new(kind: FailureKind, message: impl Into<String>) -> Self {
        Self {
            kind,
            message: message.into(),
        }
    }

    /// Machine-readable record emitted on stderr.
    pub fn record(&self) -> Value {
        json!({
            "error": self.kind.label(),
            "exit_code": self.kind.exit_code(),
            "message": self.message,
        })
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} error: {}", self.kind.label(), self.message)
    }
}

impl std::error::Error for RunError {}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::new(FailureKind::Validation, e.to_string())
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        let kind = match e {
            Error::SolverDiverged { .. } => FailureKind::Integrity,
            Error::Consistency(_) => FailureKind::Internal,
            _ => FailureKind::Validation,
        };
        RunError::new(kind, e.to_string())
    }
}

/// Tabular output with a fixed header.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    /// RFC-4180 CSV with LF endings and 17 significant digits per value.
    pub fn to_csv(&self) -> Result<String, RunError> {
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let io = |e: csv::Error| RunError::new(FailureKind::Io, e.to_string());
        writer.write_record(&self.columns).map_err(io)?;
        for row in &self.rows {
            writer.write_record(row.iter().map(|v| format_float(*v))).map_err(io)?;
        }
        let bytes = writer
            .into_inner()
            .map_err(|e| RunError::new(FailureKind::Io, e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| RunError::new(FailureKind::Internal, e.to_string()))
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let obj: Map<String, Value> = self
                        .columns
                        .iter()
                        .zip(row)
                        .map(|(c, v)| (c.clone(), json_number(*v)))
                        .collect();
                    Value::Object(obj)
                })
                .collect(),
        )
    }
}

/// Scientific notation with 17 significant digits.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn json_number(v: f64) -> Value {
    serde_json::Number::from_f64(v).map_or(Value::Null, Value::Number)
}

/// Result of a run: the data table, an optional summary, and any integrity
/// failure that should turn into exit code 3 after the data is written.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub mode: Mode,
    pub table: Table,
    pub summary: Option<Value>,
    pub integrity_failure: Option<RunError>,
}

impl Report {
    /// Primary output in the requested format.
    pub fn render(&self, format: Format) -> Result<String, RunError> {
        match format {
            Format::Csv => self.table.to_csv(),
            Format::Json => {
                let mut doc = Map::new();
                doc.insert("mode".into(), Value::String(self.mode.to_string()));
                doc.insert("samples".into(), self.table.to_json());
                if let Some(summary) = &self.summary {
                    doc.insert("summary".into(), summary.clone());
                }
                let mut text = serde_json::to_string_pretty(&Value::Object(doc))
                    .map_err(|e| RunError::new(FailureKind::Internal, e.to_string()))?;
                text.push('\n');
                Ok(text)
            }
        }
    }
}

/// Execute a configuration. `jobs` bounds sweep concurrency.
pub fn run(config: &RunConfig, jobs: usize) -> Result<Report, RunError> {
    let checked = config.checked_params()?;
    match config.mode {
        Mode::Analytic => run_analytic(config, &checked),
        Mode::Oracle => run_oracle_mode(config, &checked, false),
        Mode::Compare => run_oracle_mode(config, &checked, true),
        Mode::Sweep => run_sweep(config, jobs),
    }
}

fn resonance_summary(res: &ResonanceParams) -> Value {
    json!({
        "n": res.n,
        "k_bar": res.k_bar_n,
        "e_bar": res.e_bar_n,
        "v0_bar": res.v0_bar,
        "g": res.g,
        "d_sq": res.d_sq,
        "h_sq": res.h_sq,
        "delta_shift": res.delta_shift,
        "h_over_d": res.h_over_d(),
        "rate_analytic": res.decay_rate(),
    })
}

fn run_analytic(config: &RunConfig, checked: &CheckedParams) -> Result<Report, RunError> {
    let p = checked.params();
    let res = resonance::resonance_params(p, config.n)?;
    let frame = ScalingFrame::from_params(p)?;
    let mut table = Table::new(&["t", "tau", "alpha", "p_survival", "p_nonadiabatic"]);
    for i in 0..=config.sample_count {
        let t = config.t_final * i as f64 / config.sample_count as f64;
        let tau = frame.tau(t)?;
        let alpha = resonance::decay_exponent(p, config.n, t)?;
        table.rows.push(vec![
            t,
            tau,
            alpha,
            resonance::survival_probability(p, config.n, t)?,
            resonance::nonadiabatic_probability(p, config.n, t)?,
        ]);
    }
    let summary = json!({
        "resonance": resonance_summary(&res),
        "p_saturation": resonance::saturation_probability(p, config.n)?,
    });
    Ok(Report {
        mode: Mode::Analytic,
        table,
        summary: Some(summary),
        integrity_failure: None,
    })
}

fn integrity_summary(report: &IntegrityReport) -> Value {
    json!({
        "max_norm_drift": report.max_norm_drift,
        "max_leak": report.max_leak,
        "max_leak_in_window": report.max_leak_in_window,
        "max_channel2_norm": report.max_channel2_norm,
        "zero_coupling": report.zero_coupling,
        "violations": report.violations(),
    })
}

fn oracle_summary(run: &OracleRun) -> Value {
    let fit = run.curve.fit;
    let rate_analytic = run.resonance.decay_rate();
    json!({
        "rate_fit": fit.rate,
        "rate_analytic": rate_analytic,
        "rel_err": (fit.rate - rate_analytic).abs() / rate_analytic,
        "fit_r_squared": fit.r_squared,
        "fit_intercept": fit.intercept,
        "fit_samples": fit.used,
        "fit_window": [run.curve.fit_window.0, run.curve.fit_window.1],
        "resonance": resonance_summary(&run.resonance),
        "grid": {
            "length": run.grid.length,
            "n_points": run.grid.n_points,
            "dx": run.grid.dx,
            "width": run.width,
            "dt": run.dt,
            "steps": run.steps,
        },
        "integrity": integrity_summary(&run.integrity),
    })
}

fn run_oracle_mode(config: &RunConfig, checked: &CheckedParams, compare: bool) -> Result<Report, RunError> {
    let oracle = tdse::run_oracle(checked, &config.oracle_settings())?;
    let p = checked.params();
    let mut table = if compare {
        Table::new(&["t", "tau", "alpha", "p_survival", "p_nonadiabatic", "p_numeric"])
    } else {
        Table::new(&["t", "tau", "p_numeric", "p_survival"])
    };
    for s in &oracle.curve.samples {
        if compare {
            table.rows.push(vec![
                s.t,
                s.tau,
                resonance::decay_exponent(p, config.n, s.t)?,
                s.p_analytic,
                resonance::nonadiabatic_probability(p, config.n, s.t)?,
                s.p_numeric,
            ]);
        } else {
            table.rows.push(vec![s.t, s.tau, s.p_numeric, s.p_analytic]);
        }
    }
    let violations = oracle.integrity.violations();
    let integrity_failure = (!violations.is_empty())
        .then(|| RunError::new(FailureKind::Integrity, violations.join("; ")));
    Ok(Report {
        mode: config.mode,
        table,
        summary: Some(oracle_summary(&oracle)),
        integrity_failure,
    })
}

fn with_axis_value(base: &PhysicalParams, n: u32, parameter: &str, value: f64) -> Result<(PhysicalParams, u32), RunError> {
    let mut p = *base;
    let mut level = n;
    match parameter {
        "mu" => p.mu = value,
        "hbar" => p.hbar = value,
        "u0_bar" => p.u0_bar = value,
        "v2_offset" => p.v2_offset = value,
        "a_bar" => p.a_bar = value,
        "r0" => p.r0 = value,
        "v" => p.v = value,
        "v0_override" => p.v0_override = Some(value),
        "n" => {
            if value < 1.0 || value.fract() != 0.0 || value > u32::MAX as f64 {
                return Err(RunError::new(
                    FailureKind::Validation,
                    format!("sweep value {value} is not a valid resonance index"),
                ));
            }
            level = value as u32;
        }
        other => {
            return Err(RunError::new(FailureKind::Validation, format!("unknown sweep parameter `{other}`")));
        }
    }
    Ok((p, level))
}

fn sweep_row(config: &RunConfig, parameter: &str, value: f64) -> Result<Vec<f64>, RunError> {
    let (p, n) = with_axis_value(&config.params, config.n, parameter, value)?;
    let wrap = |e: Error| RunError::new(FailureKind::Validation, format!("{parameter} = {value}: {e}"));
    let p = *params::validate(p, config.t_final).map_err(wrap)?.params();
    let res = resonance::resonance_params(&p, n).map_err(wrap)?;
    Ok(vec![
        value,
        n as f64,
        res.k_bar_n,
        res.e_bar_n,
        res.v0_bar,
        res.g,
        res.h_sq,
        res.d_sq,
        res.delta_shift,
        res.decay_rate(),
        resonance::saturation_probability(&p, n).map_err(wrap)?,
        resonance::nonadiabatic_probability(&p, n, config.t_final).map_err(wrap)?,
    ])
}

fn run_sweep(config: &RunConfig, jobs: usize) -> Result<Report, RunError> {
    let axis = config
        .sweep
        .as_ref()
        .ok_or_else(|| RunError::new(FailureKind::Validation, "sweep mode requires an axis"))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| RunError::new(FailureKind::Internal, e.to_string()))?;
    // collect() keeps input order regardless of scheduling
    let rows: Vec<Result<Vec<f64>, RunError>> = pool.install(|| {
        axis.values
            .par_iter()
            .map(|&value| sweep_row(config, &axis.parameter, value))
            .collect()
    });
    let mut table = Table::new(&[
        axis.parameter.as_str(),
        "n",
        "k_bar",
        "e_bar",
        "v0_bar",
        "g",
        "h_sq",
        "d_sq",
        "delta_shift",
        "rate_analytic",
        "p_saturation",
        "p_nonadiabatic",
    ]);
    for row in rows {
        table.rows.push(row?);
    }
    Ok(Report {
        mode: Mode::Sweep,
        table,
        summary: None,
        integrity_failure: None,
    })
}
