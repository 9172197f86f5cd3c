//! Report rows and their CSV / JSON-lines rendering.
//!
//! Reals are written with 17 significant digits so every value round-trips
//! and a fixed set of rows always renders to the same bytes.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ReportFormat;
use crate::{Error, Result};

/// Column order of the CSV header.
pub const COLUMNS: [&str; 12] = [
    "label",
    "swept_parameter",
    "swept_value",
    "closed_form",
    "oracle",
    "mc_mean",
    "mc_stderr",
    "z_score",
    "rel_err",
    "trials",
    "runtime_ms",
    "pass",
];

/// `|z|` above this fails a Monte Carlo comparison.
pub const Z_LIMIT: f64 = 4.0;

/// A Monte Carlo mean this close to the closed form (relative, floored at an
/// absolute gap for values below 1) passes whatever its z-score. Zero-spread
/// estimates such as a constant reward stream differ from the closed form
/// only by rounding, and their rounding-level stderr makes z meaningless.
pub const MC_RESOLUTION: f64 = 1e-12;

/// Largest tolerated relative gap between a closed form and its series oracle.
pub const ORACLE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportRow {
    pub label: String,
    pub swept_parameter: Option<String>,
    pub swept_value: Option<f64>,
    pub closed_form: Option<f64>,
    pub oracle: Option<f64>,
    pub mc_mean: Option<f64>,
    pub mc_stderr: Option<f64>,
    /// `(mc_mean - closed_form) / mc_stderr`.
    pub z_score: Option<f64>,
    /// Relative error of `mc_mean`, or of `oracle` when there is no Monte
    /// Carlo estimate, against `closed_form`.
    pub rel_err: Option<f64>,
    pub trials: Option<u64>,
    pub runtime_ms: Option<f64>,
    pub pass: bool,
}

impl ReportRow {
    pub fn new(label: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            swept_parameter: None,
            swept_value: None,
            closed_form: None,
            oracle: None,
            mc_mean: None,
            mc_stderr: None,
            z_score: None,
            rel_err: None,
            trials: None,
            runtime_ms: None,
            pass: true,
        }
    }

    pub fn closed_form(mut self, value: f64) -> Self {
        self.closed_form = Some(value);
        self
    }

    pub fn oracle(mut self, value: f64) -> Self {
        self.oracle = Some(value);
        self
    }

    pub fn monte_carlo(mut self, mean: f64, stderr: f64, trials: u64) -> Self {
        self.mc_mean = Some(mean);
        self.mc_stderr = Some(stderr);
        self.trials = Some(trials);
        self
    }

    pub fn swept(mut self, parameter: &str, value: f64) -> Self {
        self.swept_parameter = Some(parameter.to_owned());
        self.swept_value = Some(value);
        self
    }

    /// Fills `z_score` and `rel_err` and applies the two-sided pass rule:
    /// oracle within [`ORACLE_TOLERANCE`], `|z|` within [`Z_LIMIT`].
    pub fn judged(self) -> Self {
        self.judged_with(|z| z.abs() <= Z_LIMIT)
    }

    /// As [`judged`](Self::judged) with a custom test on the z-score.
    pub fn judged_with(mut self, z_ok: impl Fn(f64) -> bool) -> Self {
        let mut pass = true;
        if let Some(cf) = self.closed_form {
            pass &= cf.is_finite();
            if let Some(o) = self.oracle {
                pass &= oracle_agrees(cf, o);
            }
            if let (Some(m), Some(se)) = (self.mc_mean, self.mc_stderr) {
                self.z_score = crate::sim::z_score(m, se, cf);
                let resolved = (m - cf).abs() <= MC_RESOLUTION * cf.abs().max(1.0);
                pass &= resolved || self.z_score.is_some_and(&z_ok);
            }
            self.rel_err = self.mc_mean.or(self.oracle).map(|x| relative_error(x, cf));
        }
        self.pass = pass;
        self
    }
}

/// `|x - reference| / |reference|`, or the absolute gap when the reference is 0.
pub fn relative_error(x: f64, reference: f64) -> f64 {
    let gap = (x - reference).abs();
    if reference == 0.0 {
        gap
    } else {
        gap / reference.abs()
    }
}

/// Relative agreement within [`ORACLE_TOLERANCE`], with an absolute floor of
/// a few ulps of 1 for values that are exactly zero in closed form.
pub fn oracle_agrees(closed_form: f64, oracle: f64) -> bool {
    let scale = closed_form.abs().max(oracle.abs());
    (closed_form - oracle).abs() <= ORACLE_TOLERANCE * scale + 4.0 * f64::EPSILON
}

/// 0 when every row passes, 1 otherwise.
pub fn exit_code(rows: &[ReportRow]) -> i32 {
    if rows.iter().all(|r| r.pass) {
        0
    } else {
        1
    }
}

fn real(x: Option<f64>) -> String {
    match x {
        None => String::new(),
        Some(v) if v.is_finite() => format!("{v:.16e}"),
        Some(v) if v.is_nan() => "NaN".to_owned(),
        Some(v) if v > 0.0 => "inf".to_owned(),
        Some(_) => "-inf".to_owned(),
    }
}

fn json_real(x: Option<f64>) -> String {
    match x {
        Some(v) if v.is_finite() => format!("{v:.16e}"),
        _ => "null".to_owned(),
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

/// Renders `rows` in `format`. Fails on an empty row set.
pub fn render_report(rows: &[ReportRow], format: ReportFormat) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::invalid("report", "a report needs at least one row"));
    }
    let mut out = String::new();
    match format {
        ReportFormat::Csv => {
            out.push_str(&COLUMNS.join(","));
            out.push('\n');
            for r in rows {
                let fields = [
                    csv_field(&r.label),
                    csv_field(r.swept_parameter.as_deref().unwrap_or("")),
                    real(r.swept_value),
                    real(r.closed_form),
                    real(r.oracle),
                    real(r.mc_mean),
                    real(r.mc_stderr),
                    real(r.z_score),
                    real(r.rel_err),
                    r.trials.map(|t| t.to_string()).unwrap_or_default(),
                    real(r.runtime_ms),
                    r.pass.to_string(),
                ];
                out.push_str(&fields.join(","));
                out.push('\n');
            }
        }
        ReportFormat::JsonLines => {
            for r in rows {
                let text = |s: &Option<String>| s.as_ref().map_or("null".to_owned(), |s| serde_json::Value::from(s.as_str()).to_string());
                let _ = writeln!(
                    out,
                    "{{\"label\":{},\"swept_parameter\":{},\"swept_value\":{},\"closed_form\":{},\"oracle\":{},\"mc_mean\":{},\"mc_stderr\":{},\"z_score\":{},\"rel_err\":{},\"trials\":{},\"runtime_ms\":{},\"pass\":{}}}",
                    serde_json::Value::from(r.label.as_str()),
                    text(&r.swept_parameter),
                    json_real(r.swept_value),
                    json_real(r.closed_form),
                    json_real(r.oracle),
                    json_real(r.mc_mean),
                    json_real(r.mc_stderr),
                    json_real(r.z_score),
                    json_real(r.rel_err),
                    r.trials.map_or("null".to_owned(), |t| t.to_string()),
                    json_real(r.runtime_ms),
                    r.pass,
                );
            }
        }
    }
    Ok(out)
}

/// Writes the report to `path`, or to standard output when `path` is `None`.
pub fn emit_report(rows: &[ReportRow], format: ReportFormat, path: Option<&Path>) -> Result<()> {
    let text = render_report(rows, format)?;
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}

fn parse_real(s: &str, column: &str) -> Result<Option<f64>> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse::<f64>()
        .map(Some)
        .map_err(|e| Error::invalid("report", format!("column {column}: {e}")))
}

/// Reads a report written by [`emit_report`].
pub fn load_report(path: impl AsRef<Path>, format: ReportFormat) -> Result<Vec<ReportRow>> {
    let text = std::fs::read_to_string(path)?;
    parse_report(&text, format)
}

pub fn parse_report(text: &str, format: ReportFormat) -> Result<Vec<ReportRow>> {
    match format {
        ReportFormat::JsonLines => text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| serde_json::from_str(l).map_err(|e| Error::invalid("report", e.to_string())))
            .collect(),
        ReportFormat::Csv => {
            let mut reader = csv::Reader::from_reader(text.as_bytes());
            let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
            if header != COLUMNS {
                return Err(Error::invalid("report", format!("unexpected header {header:?}")));
            }
            let mut rows = Vec::new();
            for record in reader.records() {
                let rec = record?;
                let f = |i: usize| rec.get(i).unwrap_or("");
                let opt = |s: &str| (!s.is_empty()).then(|| s.to_owned());
                rows.push(ReportRow {
                    label: f(0).to_owned(),
                    swept_parameter: opt(f(1)),
                    swept_value: parse_real(f(2), COLUMNS[2])?,
                    closed_form: parse_real(f(3), COLUMNS[3])?,
                    oracle: parse_real(f(4), COLUMNS[4])?,
                    mc_mean: parse_real(f(5), COLUMNS[5])?,
                    mc_stderr: parse_real(f(6), COLUMNS[6])?,
                    z_score: parse_real(f(7), COLUMNS[7])?,
                    rel_err: parse_real(f(8), COLUMNS[8])?,
                    trials: opt(f(9))
                        .map(|s| s.parse::<u64>())
                        .transpose()
                        .map_err(|e| Error::invalid("report", format!("column trials: {e}")))?,
                    runtime_ms: parse_real(f(10), COLUMNS[10])?,
                    pass: f(11)
                        .parse::<bool>()
                        .map_err(|e| Error::invalid("report", format!("column pass: {e}")))?,
                });
            }
            Ok(rows)
        }
    }
}
