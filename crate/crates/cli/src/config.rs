//! JSON run configs, translated into the equivalent command line.
//!
//! ```json
//! {
//!   "command": "markov-verify",
//!   "inputs": {"chains": "chains.json"},
//!   "seed": 42,
//!   "tolerances": {"rel_tol": 1e-8},
//!   "output": "report.json",
//!   "format": "json",
//!   "options": {"trials": 10000}
//! }
//! ```
//!
//! Relative paths are resolved against the directory of the config file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::Parser;
use serde::Deserialize;
use serde_json::Value;

use crate::{Cli, Command, ConfigError};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: String,
    #[serde(default)]
    pub inputs: BTreeMap<String, PathBuf>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub tolerances: Tolerances,
    pub output: Option<PathBuf>,
    pub format: Option<String>,
    #[serde(default)]
    pub options: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
    pub max_subdivisions: Option<usize>,
    pub outer_radius: Option<f64>,
}

fn flag(key: &str) -> String {
    format!("--{}", key.replace('_', "-"))
}

fn option_args(key: &str, value: &Value) -> Result<Vec<String>, ConfigError> {
    let scalar = |v: &Value| match v {
        Value::Number(n) => Ok(n.to_string()),
        Value::String(s) => Ok(s.clone()),
        other => Err(ConfigError(format!("option {key}: unsupported value {other}"))),
    };
    Ok(match value {
        Value::Bool(true) => vec![flag(key)],
        Value::Bool(false) | Value::Null => vec![],
        Value::Array(items) => {
            let parts = items.iter().map(scalar).collect::<Result<Vec<_>, _>>()?;
            vec![flag(key), parts.join(",")]
        }
        other => vec![flag(key), scalar(other)?],
    })
}

impl RunConfig {
    /// Equivalent argument vector, program name included.
    pub fn to_args(&self, base: &Path) -> Result<Vec<String>, ConfigError> {
        if self.command == "run" {
            return Err(ConfigError("a run config cannot invoke `run`".into()));
        }
        let resolve = |p: &PathBuf| base.join(p).display().to_string();
        let mut args = vec!["nlfisher".to_string(), self.command.clone()];
        for (k, p) in &self.inputs {
            args.extend([flag(k), resolve(p)]);
        }
        if let Some(seed) = self.seed {
            args.extend(["--seed".into(), seed.to_string()]);
        }
        let t = &self.tolerances;
        let numeric = [
            ("rel_tol", t.rel_tol.map(|v| v.to_string())),
            ("abs_tol", t.abs_tol.map(|v| v.to_string())),
            ("max_subdivisions", t.max_subdivisions.map(|v| v.to_string())),
            ("outer_radius", t.outer_radius.map(|v| v.to_string())),
        ];
        for (k, v) in numeric {
            if let Some(v) = v {
                args.extend([flag(k), v]);
            }
        }
        if let Some(out) = &self.output {
            args.extend(["--output".into(), resolve(out)]);
        }
        if let Some(format) = &self.format {
            args.extend(["--format".into(), format.clone()]);
        }
        for (k, v) in &self.options {
            args.extend(option_args(k, v)?);
        }
        Ok(args)
    }
}

pub fn load(path: &Path) -> Result<Command, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
    let cfg: RunConfig = serde_json::from_str(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let args = cfg.to_args(base)?;
    let cli = Cli::try_parse_from(&args).map_err(|e| ConfigError(e.to_string()))?;
    Ok(cli.command)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builds_arguments() {
        let cfg: RunConfig = serde_json::from_str(
            r#"{"command": "frac-limit", "inputs": {"density": "c.json"}, "tolerances": {"rel_tol": 1e-7},
                "format": "csv", "options": {"s_grid": [0.6, 0.9], "timing": true}}"#,
        )
        .unwrap();
        let args = cfg.to_args(Path::new("/tmp/x")).unwrap();
        assert_eq!(
            args,
            [
                "nlfisher", "frac-limit", "--density", "/tmp/x/c.json", "--rel-tol", "0.0000001", "--format", "csv",
                "--s-grid", "0.6,0.9", "--timing"
            ]
        );
    }

    #[test]
    fn rejects_unknown_fields_and_recursion() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"command": "constants", "bogus": 1}"#).is_err());
        let cfg: RunConfig = serde_json::from_str(r#"{"command": "run"}"#).unwrap();
        assert!(cfg.to_args(Path::new(".")).is_err());
    }
}
