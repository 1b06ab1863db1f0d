//! `nlfisher` batch driver.
//!
//! Exit status: 0 when every check passes, 1 when any check fails or a
//! computation aborts, 2 on configuration errors.

mod commands;
mod config;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nlfisher::quadrature::QuadConfig;
use nlfisher::report::{render_report, write_atomic, ReportFormat, VerificationReport};

/// Environment variable that bounds the worker pool.
pub const WORKERS_ENV: &str = "NLFISHER_WORKERS";

#[derive(Debug, Parser)]
#[command(name = "nlfisher", version, about = "Numerical checks for nonlocal Fisher information")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Randomized lifting, entropy and key-inequality suites on finite chains.
    MarkovVerify(commands::MarkovArgs),
    /// Entropy dissipation along the heat flow of finite chains.
    Dissipation(commands::DissipationArgs),
    /// Fractional Fisher information as s approaches 1.
    FracLimit(commands::FracLimitArgs),
    /// Blachman–Stam inequality over an (alpha, s) grid.
    FracBsi(commands::FracBsiArgs),
    /// Scaling law of the fractional Fisher information.
    FracScaling(commands::FracScalingArgs),
    /// Carré du champ identities for Laguerre and Jacobi operators.
    GammaVerify(commands::GammaArgs),
    /// Normalization constant c(d,s) with its quadrature cross-check.
    Constants(commands::ConstantsArgs),
    /// Runs a command described by a JSON config file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => ReportFormat::Csv,
            Format::Json => ReportFormat::Json,
        }
    }
}

/// Output and quadrature options shared by all commands.
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Report path; standard output when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Record wall time per check (makes reports differ between runs).
    #[arg(long)]
    pub timing: bool,
    #[arg(long)]
    pub rel_tol: Option<f64>,
    #[arg(long)]
    pub abs_tol: Option<f64>,
    #[arg(long)]
    pub max_subdivisions: Option<usize>,
    #[arg(long)]
    pub outer_radius: Option<f64>,
}

impl Common {
    pub fn quad_config(&self) -> Result<QuadConfig, ConfigError> {
        let mut cfg = QuadConfig::default();
        if let Some(v) = self.rel_tol {
            cfg.rel_tol = v;
        }
        if let Some(v) = self.abs_tol {
            cfg.abs_tol = v;
        }
        if let Some(v) = self.max_subdivisions {
            cfg.max_subdivisions = v;
        }
        if let Some(v) = self.outer_radius {
            cfg.outer_truncation_radius = v;
        }
        cfg.validate().map_err(|e| ConfigError(e.to_string()))?;
        Ok(cfg)
    }
}

/// Invalid input: bad flags, unreadable or malformed files, bad values.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

/// Result of a command: report records, and optionally a replacement for
/// the CSV rendering (sweep tables).
pub struct Outcome {
    pub records: Vec<VerificationReport>,
    pub csv: Option<Vec<u8>>,
}

impl Outcome {
    pub fn records(records: Vec<VerificationReport>) -> Self {
        Self { records, csv: None }
    }
}

fn configure_workers() -> Result<(), ConfigError> {
    let Ok(raw) = std::env::var(WORKERS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| ConfigError(format!("{WORKERS_ENV} must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| ConfigError(format!("worker pool: {e}")))
}

fn write_output(common: &Common, outcome: &Outcome) -> anyhow::Result<()> {
    let bytes = match (common.format, &outcome.csv) {
        (Format::Csv, Some(csv)) => csv.clone(),
        (format, _) => render_report(&outcome.records, format.into())?,
    };
    match &common.output {
        Some(path) => write_atomic(path, &bytes)?,
        None => std::io::stdout().write_all(&bytes)?,
    }
    Ok(())
}

fn execute(command: Command) -> Result<bool, ExitCode> {
    let command = match command {
        Command::Run { config } => match config::load(&config) {
            Ok(c) => c,
            Err(e) => return Err(config_failure(&e)),
        },
        other => other,
    };
    let common = commands::common(&command).clone();
    let started = Instant::now();
    let outcome = match commands::dispatch(&command) {
        Ok(o) => o,
        Err(e) => match e.downcast::<ConfigError>() {
            Ok(c) => return Err(config_failure(&c)),
            Err(e) => Outcome::records(vec![commands::failure_record(&command, &e)]),
        },
    };
    let mut outcome = outcome;
    if common.timing {
        let elapsed = started.elapsed().as_secs_f64();
        for r in &mut outcome.records {
            r.wall_time_s = Some(elapsed);
        }
    }
    for r in outcome.records.iter().filter(|r| !r.pass) {
        eprintln!("FAIL {}: residual_or_slack {:e} tolerance {:e}", r.check, r.residual_or_slack, r.tolerance);
    }
    if let Err(e) = write_output(&common, &outcome) {
        eprintln!("error: {e:#}");
        return Err(ExitCode::from(1));
    }
    Ok(outcome.records.iter().all(|r| r.pass))
}

fn config_failure(e: &ConfigError) -> ExitCode {
    eprintln!("configuration error: {e}");
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(e) = configure_workers() {
        return config_failure(&e);
    }
    match execute(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(code) => code,
    }
}
