//! Verification records and their CSV/JSON serialization.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("i/o failure on {path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("no records to write")]
    Empty,
    #[error("serialization failure: {0}")]
    Serialize(String),
}

/// Outcome of one numerical check.
///
/// `pass` is true iff `residual_or_slack` lies within `tolerance` in the
/// sense of the check (an upper bound for residuals, a lower bound
/// `slack ≥ -tolerance` for inequalities).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub check: String,
    pub params: Map<String, Value>,
    pub value: f64,
    pub reference: Option<f64>,
    pub residual_or_slack: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
    #[serde(skip)]
    kind: CheckKind,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
enum CheckKind {
    #[default]
    Residual,
    Slack,
    Flag,
}

impl VerificationReport {
    /// Record for a residual that must not exceed `tolerance`.
    pub fn residual(check: &str, params: Map<String, Value>, value: f64, reference: Option<f64>, residual: f64, tolerance: f64) -> Self {
        Self {
            check: check.to_string(),
            params,
            value,
            reference,
            residual_or_slack: residual,
            tolerance,
            pass: residual.is_finite() && residual <= tolerance,
            wall_time_s: None,
            kind: CheckKind::Residual,
        }
    }

    /// Record for a slack that must satisfy `slack ≥ -tolerance`.
    pub fn slack(check: &str, params: Map<String, Value>, value: f64, reference: Option<f64>, slack: f64, tolerance: f64) -> Self {
        Self {
            check: check.to_string(),
            params,
            value,
            reference,
            residual_or_slack: slack,
            tolerance,
            pass: slack.is_finite() && slack >= -tolerance,
            wall_time_s: None,
            kind: CheckKind::Slack,
        }
    }

    /// Record for a qualitative check.
    pub fn flag(check: &str, params: Map<String, Value>, value: f64, pass: bool) -> Self {
        Self {
            check: check.to_string(),
            params,
            value,
            reference: None,
            residual_or_slack: 0.0,
            tolerance: 0.0,
            pass,
            wall_time_s: None,
            kind: CheckKind::Flag,
        }
    }

    /// Re-judges the record against a new tolerance. Qualitative records
    /// are unchanged.
    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        let v = self.residual_or_slack;
        match self.kind {
            CheckKind::Residual => {
                self.tolerance = tolerance;
                self.pass = v.is_finite() && v <= tolerance;
            }
            CheckKind::Slack => {
                self.tolerance = tolerance;
                self.pass = v.is_finite() && v >= -tolerance;
            }
            CheckKind::Flag => {}
        }
        self
    }
}

/// Builds a parameter map from `(key, value)` pairs.
#[macro_export]
macro_rules! params {
    () => { ::serde_json::Map::new() };
    ($($k:expr => $v:expr),+ $(,)?) => {{
        let mut m = ::serde_json::Map::new();
        $( m.insert($k.to_string(), ::serde_json::json!($v)); )+
        m
    }};
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
}

/// Float text with 17 significant digits.
pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

pub const REPORT_COLUMNS: [&str; 7] = [
    "check",
    "params",
    "value",
    "reference",
    "residual_or_slack",
    "tolerance",
    "pass",
];

/// Serializes records in the given format.
pub fn render_report(records: &[VerificationReport], format: ReportFormat) -> Result<Vec<u8>, ReportError> {
    if records.is_empty() {
        return Err(ReportError::Empty);
    }
    match format {
        ReportFormat::Json => {
            let mut out = serde_json::to_vec_pretty(records).map_err(|e| ReportError::Serialize(e.to_string()))?;
            out.push(b'\n');
            Ok(out)
        }
        ReportFormat::Csv => {
            let rows = records.iter().map(|r| {
                vec![
                    r.check.clone(),
                    Value::Object(r.params.clone()).to_string(),
                    format_float(r.value),
                    r.reference.map(format_float).unwrap_or_default(),
                    format_float(r.residual_or_slack),
                    format_float(r.tolerance),
                    r.pass.to_string(),
                ]
            });
            render_csv(&REPORT_COLUMNS, rows)
        }
    }
}

/// CSV bytes for a header and rows.
pub fn render_csv<I>(header: &[&str], rows: I) -> Result<Vec<u8>, ReportError>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(|e| ReportError::Serialize(e.to_string()))?;
    for row in rows {
        w.write_record(&row).map_err(|e| ReportError::Serialize(e.to_string()))?;
    }
    w.into_inner().map_err(|e| ReportError::Serialize(e.to_string()))
}

/// Writes records to `path` through a temporary file and a rename.
pub fn emit_report(records: &[VerificationReport], path: &Path, format: ReportFormat) -> Result<(), ReportError> {
    write_atomic(path, &render_report(records, format)?)
}

/// Replaces `path` by `bytes` atomically.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), ReportError> {
    let io_err = |source| ReportError::Io {
        path: path.display().to_string(),
        source,
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    let result = (|| {
        let mut file = fs::File::create(&tmp)?;
        file.write_all(bytes)?;
        file.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(io_err)
}
