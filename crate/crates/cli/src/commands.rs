use std::path::{Path, PathBuf};

use anyhow::Result;
use clap::Args;
use rayon::prelude::*;
use serde::de::DeserializeOwned;

use nlfisher::fractional::{
    bsi_slack, limit_sweep, normalization_constant,
    normalization_constant_quadrature, scaling_check, DensityModel, FracError, FracKernelSpec,
};
use nlfisher::gamma_calculus::{
    fisher_gamma, mixture_density, pointwise_projection_slack, random_bracket_residual, reference_density,
    reference_density_alt, verify_diffusion_chain_rule, verify_projection_inequality, verify_tensor_identity,
    DiffusionOperator1D, FunctionSpec, SmoothFunction,
};
use nlfisher::markov::suite::{self, ChainSource, DISSIPATION_STEP, RATIO_STEP};
use nlfisher::markov::ChainModel;
use nlfisher::params;
use nlfisher::quadrature::QuadConfig;
use nlfisher::report::VerificationReport;

use crate::{Command, Common, ConfigError, Outcome};

fn config_err(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))
}

#[derive(serde::Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    Many(Vec<T>),
    One(T),
}

fn chain_source(path: &Option<PathBuf>, min_n: usize, max_n: usize) -> Result<ChainSource> {
    match path {
        Some(p) => {
            let chains = match read_json::<OneOrMany<ChainModel>>(p)? {
                OneOrMany::Many(v) => v,
                OneOrMany::One(c) => vec![c],
            };
            if chains.is_empty() {
                return Err(config_err(format!("{}: no chains", p.display())));
            }
            Ok(ChainSource::Fixed(chains))
        }
        None => {
            if min_n < 1 || min_n > max_n {
                return Err(config_err(format!("state counts need 1 <= min-n <= max-n, got {min_n}, {max_n}")));
            }
            Ok(ChainSource::Random { min_n, max_n })
        }
    }
}

fn apply_tolerance(records: Vec<VerificationReport>, tolerance: Option<f64>) -> Vec<VerificationReport> {
    match tolerance {
        Some(t) => records.into_iter().map(|r| r.with_tolerance(t)).collect(),
        None => records,
    }
}

fn in_unit_interval(name: &str, values: &[f64]) -> Result<()> {
    match values.iter().find(|v| !(**v > 0.0 && **v < 1.0)) {
        Some(v) => Err(config_err(format!("{name} value {v} outside (0, 1)"))),
        None if values.is_empty() => Err(config_err(format!("{name} is empty"))),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, Args)]
pub struct MarkovArgs {
    /// Chain JSON (one chain or a list); random reversible chains when absent.
    #[arg(long)]
    pub chains: Option<PathBuf>,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, default_value_t = 2)]
    pub min_n: usize,
    #[arg(long, default_value_t = 5)]
    pub max_n: usize,
    /// Replaces the tolerance of every check.
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct DissipationArgs {
    #[arg(long)]
    pub chains: Option<PathBuf>,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 2)]
    pub min_n: usize,
    #[arg(long, default_value_t = 5)]
    pub max_n: usize,
    #[arg(long, value_delimiter = ',', default_value = "0,0.5,2")]
    pub times: Vec<f64>,
    #[arg(long, default_value_t = DISSIPATION_STEP)]
    pub dt: f64,
    /// Coarse step of the convergence-order check.
    #[arg(long, default_value_t = RATIO_STEP)]
    pub ratio_dt: f64,
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct FracLimitArgs {
    #[arg(long)]
    pub density: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "0.6,0.7,0.8,0.9,0.95,0.99")]
    pub s_grid: Vec<f64>,
    /// Largest accepted final deviation, relative to the classical value.
    #[arg(long, default_value_t = 0.15)]
    pub final_fraction: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct FracBsiArgs {
    #[arg(long)]
    pub f: PathBuf,
    #[arg(long)]
    pub g: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9")]
    pub alphas: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0.3,0.5,0.7,0.9")]
    pub s_grid: Vec<f64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct FracScalingArgs {
    #[arg(long)]
    pub density: PathBuf,
    #[arg(long = "c", value_delimiter = ',', default_value = "0.5,2")]
    pub factors: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0.3,0.6,0.9")]
    pub s_grid: Vec<f64>,
    /// Accepted `|ratio - 1|`.
    #[arg(long, default_value_t = 0.02)]
    pub tolerance: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct GammaArgs {
    /// Operator JSON, e.g. `{"kind": "laguerre", "alpha": 1.0}`.
    #[arg(long)]
    pub operator: PathBuf,
    /// Density relative to the operator's measure (function JSON).
    #[arg(long)]
    pub density: Option<PathBuf>,
    /// Second density for the mixture in the projection check.
    #[arg(long)]
    pub alt_density: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 1000)]
    pub draws: usize,
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct ConstantsArgs {
    #[arg(long)]
    pub d: usize,
    #[arg(long, value_delimiter = ',')]
    pub s: Vec<f64>,
    /// Accepted relative gap between closed form and quadrature.
    #[arg(long, default_value_t = 1e-6)]
    pub tolerance: f64,
    #[command(flatten)]
    pub common: Common,
}

pub fn common(command: &Command) -> &Common {
    match command {
        Command::MarkovVerify(a) => &a.common,
        Command::Dissipation(a) => &a.common,
        Command::FracLimit(a) => &a.common,
        Command::FracBsi(a) => &a.common,
        Command::FracScaling(a) => &a.common,
        Command::GammaVerify(a) => &a.common,
        Command::Constants(a) => &a.common,
        Command::Run { .. } => unreachable!("run configs are expanded before dispatch"),
    }
}

fn command_name(command: &Command) -> &'static str {
    match command {
        Command::MarkovVerify(_) => "markov-verify",
        Command::Dissipation(_) => "dissipation",
        Command::FracLimit(_) => "frac-limit",
        Command::FracBsi(_) => "frac-bsi",
        Command::FracScaling(_) => "frac-scaling",
        Command::GammaVerify(_) => "gamma-verify",
        Command::Constants(_) => "constants",
        Command::Run { .. } => "run",
    }
}

/// Failing record standing in for a computation that aborted.
pub fn failure_record(command: &Command, error: &anyhow::Error) -> VerificationReport {
    VerificationReport::flag(
        &format!("{}.error", command_name(command)),
        params! {"error" => format!("{error:#}")},
        f64::NAN,
        false,
    )
}

pub fn dispatch(command: &Command) -> Result<Outcome> {
    match command {
        Command::MarkovVerify(a) => markov_verify(a),
        Command::Dissipation(a) => dissipation(a),
        Command::FracLimit(a) => frac_limit(a),
        Command::FracBsi(a) => frac_bsi(a),
        Command::FracScaling(a) => frac_scaling(a),
        Command::GammaVerify(a) => gamma_verify(a),
        Command::Constants(a) => constants(a),
        Command::Run { .. } => unreachable!("run configs are expanded before dispatch"),
    }
}

fn markov_verify(a: &MarkovArgs) -> Result<Outcome> {
    let source = chain_source(&a.chains, a.min_n, a.max_n)?;
    if a.trials == 0 {
        return Err(config_err("trials must be positive"));
    }
    let records = suite::all(&source, a.seed, a.trials)?;
    Ok(Outcome::records(apply_tolerance(records, a.tolerance)))
}

fn dissipation(a: &DissipationArgs) -> Result<Outcome> {
    let source = chain_source(&a.chains, a.min_n, a.max_n)?;
    if a.trials == 0 || !(a.dt > 0.0) || !(a.ratio_dt > 0.0) || a.times.iter().any(|t| !(*t >= 0.0)) {
        return Err(config_err("need trials > 0, positive steps and nonnegative times"));
    }
    let mut records = suite::dissipation(&source, a.seed, a.trials, &a.times, a.dt, a.ratio_dt)?;
    if let Some(t) = a.tolerance {
        records[0] = records[0].clone().with_tolerance(t);
    }
    Ok(Outcome::records(records))
}

fn frac_limit(a: &FracLimitArgs) -> Result<Outcome> {
    let cfg = a.common.quad_config()?;
    let f: DensityModel = read_json(&a.density)?;
    in_unit_interval("s-grid", &a.s_grid)?;
    if a.s_grid.len() < 3 {
        return Err(config_err("s-grid needs at least three points"));
    }
    let sweep = match limit_sweep(&f, &a.s_grid, &cfg) {
        Err(FracError::HypothesisViolated(msg)) => {
            return Ok(Outcome::records(vec![VerificationReport::flag(
                "fractional.limit_hypotheses",
                params! {"density" => serde_json::to_value(&f)?, "details" => msg},
                f64::NAN,
                false,
            )]))
        }
        other => other?,
    };
    let last = sweep.rows.last().expect("nonempty grid");
    let i = sweep.i_classical.value;
    let decreasing = sweep.deviation_decreasing(3);
    let p = params! {
        "density" => serde_json::to_value(&f)?,
        "s_grid" => &a.s_grid,
        "i_classical" => i,
        "hypotheses" => serde_json::to_value(&sweep.hypotheses)?,
    };
    let mut records = vec![VerificationReport::flag(
        "fractional.limit_monotone",
        p.clone(),
        last.deviation,
        decreasing && sweep.all_converged(),
    )];
    records.push(VerificationReport::residual(
        "fractional.limit_final_deviation",
        p,
        last.i_s,
        Some(i),
        last.deviation / i,
        a.final_fraction,
    ));
    Ok(Outcome {
        records,
        csv: Some(sweep.to_csv()?),
    })
}

fn frac_bsi(a: &FracBsiArgs) -> Result<Outcome> {
    let cfg = a.common.quad_config()?;
    let f: DensityModel = read_json(&a.f)?;
    let g: DensityModel = read_json(&a.g)?;
    if f.d() != g.d() {
        return Err(config_err("f and g must have the same dimension"));
    }
    in_unit_interval("alphas", &a.alphas)?;
    in_unit_interval("s-grid", &a.s_grid)?;
    let grid: Vec<(f64, f64)> = a.s_grid.iter().flat_map(|&s| a.alphas.iter().map(move |&al| (al, s))).collect();
    let d = f.d();
    let records = grid
        .par_iter()
        .map(|&(alpha, s)| {
            let spec = FracKernelSpec::new(d, s)?;
            let out = bsi_slack(&f, &g, alpha, &spec, &cfg)?;
            Ok(VerificationReport::slack(
                "fractional.bsi",
                params! {"alpha" => alpha, "s" => s, "i_f" => out.i_f.value, "i_g" => out.i_g.value},
                out.i_conv.value,
                Some(out.i_conv.value + out.slack),
                out.slack,
                out.error,
            ))
        })
        .collect::<Result<Vec<_>, FracError>>()?;
    Ok(Outcome::records(records))
}

fn frac_scaling(a: &FracScalingArgs) -> Result<Outcome> {
    let cfg = a.common.quad_config()?;
    let f: DensityModel = read_json(&a.density)?;
    in_unit_interval("s-grid", &a.s_grid)?;
    if a.factors.iter().any(|c| !(*c > 0.0)) {
        return Err(config_err("scale factors must be positive"));
    }
    let grid: Vec<(f64, f64)> = a.s_grid.iter().flat_map(|&s| a.factors.iter().map(move |&c| (c, s))).collect();
    let records = grid
        .par_iter()
        .map(|&(c, s)| {
            let spec = FracKernelSpec::new(f.d(), s)?;
            let out = scaling_check(&f, c, &spec, &cfg)?;
            Ok(VerificationReport::residual(
                "fractional.scaling",
                params! {"c" => c, "s" => s, "quad_error" => out.error},
                out.ratio,
                Some(1.0),
                (out.ratio - 1.0).abs(),
                a.tolerance,
            ))
        })
        .collect::<Result<Vec<_>, FracError>>()?;
    Ok(Outcome::records(records))
}

fn gamma_verify(a: &GammaArgs) -> Result<Outcome> {
    let cfg: QuadConfig = a.common.quad_config()?;
    let op: DiffusionOperator1D = read_json(&a.operator)?;
    let load = |p: &Option<PathBuf>, default: SmoothFunction| -> Result<SmoothFunction> {
        Ok(match p {
            Some(path) => read_json::<FunctionSpec>(path)?.build(),
            None => default,
        })
    };
    let f = load(&a.density, reference_density(&op))?;
    let g = load(&a.alt_density, reference_density_alt(&op))?;
    let p = params! {"operator" => serde_json::to_value(op)?};

    let mut records = Vec::new();
    let bracket = random_bracket_residual(&op, a.seed, a.draws)?;
    let mut pb = p.clone();
    pb.insert("seed".into(), a.seed.into());
    pb.insert("draws".into(), a.draws.into());
    records.push(VerificationReport::residual("gamma.bracket", pb, bracket, Some(0.0), bracket, 1e-9));

    let fisher = fisher_gamma(&op, &f, &cfg)?;
    let gap = (fisher.value - fisher.log_form).abs();
    records.push(VerificationReport::residual(
        "gamma.fisher_forms",
        p.clone(),
        fisher.value,
        Some(fisher.log_form),
        gap,
        1e-8,
    ));

    let tensor = verify_tensor_identity(&op, &f, &cfg)?;
    records.push(VerificationReport::residual(
        "gamma.tensor_identity",
        p.clone(),
        tensor.product,
        Some(2.0 * tensor.single),
        tensor.residual,
        1e-4,
    ));

    let mix = mixture_density(&f, &g);
    let proj = verify_projection_inequality(&op, &mix, &cfg)?;
    records.push(VerificationReport::slack(
        "gamma.projection_inequality",
        p.clone(),
        proj.product,
        Some(2.0 * proj.projected),
        proj.slack,
        1e-4,
    ));

    let (lo, hi) = match op.domain() {
        (lo, hi) if hi.is_finite() => (lo, hi),
        (lo, _) => (lo, lo + 5.0),
    };
    let points: Vec<f64> = (1..=20).map(|i| lo + (hi - lo) * i as f64 / 21.0).collect();
    let pointwise = pointwise_projection_slack(&op, &mix, &points, &cfg)?;
    records.push(VerificationReport::slack(
        "gamma.projection_pointwise",
        p.clone(),
        pointwise,
        None,
        pointwise,
        1e-10,
    ));

    let id = SmoothFunction::identity();
    let square = SmoothFunction::polynomial(vec![0.0, 0.0, 1.0]);
    let chain = verify_diffusion_chain_rule(&op, &SmoothFunction::ln(), &f, &id, &points)?
        .max(verify_diffusion_chain_rule(&op, &square, &f, &g, &points)?);
    records.push(VerificationReport::residual("gamma.chain_rule", p, chain, Some(0.0), chain, 1e-10));

    Ok(Outcome::records(apply_tolerance(records, a.tolerance)))
}

fn constants(a: &ConstantsArgs) -> Result<Outcome> {
    let cfg = a.common.quad_config()?;
    if a.s.is_empty() {
        return Err(config_err("--s needs at least one order"));
    }
    let mut records = Vec::new();
    for &s in &a.s {
        let closed = normalization_constant(a.d, s).map_err(|e| config_err(e.to_string()))?;
        let oracle = normalization_constant_quadrature(a.d, s, &cfg)?;
        let rel = ((closed - oracle.value) / oracle.value).abs();
        records.push(VerificationReport::residual(
            "fractional.normalization_constant",
            params! {"d" => a.d, "s" => s, "quad_error" => oracle.error_estimate},
            closed,
            Some(oracle.value),
            rel,
            a.tolerance,
        ));
    }
    Ok(Outcome::records(records))
}
