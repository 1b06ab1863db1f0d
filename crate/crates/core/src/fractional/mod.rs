//! Fractional Fisher information on `ℝ^d`, `d ∈ {1, 2}`.
//!
//! For a density `f` and `s ∈ (0, 1)`,
//!
//! ```text
//! i_s(f) = c(d,s) ∫∫ f(x) Υ(log f(x+h) - log f(x)) |h|^{-d-2s} dh dx,
//! ```
//!
//! with `Υ(r) = e^r - 1 - r`. The `x` integral is done first, giving a
//! function `I(h)` of the jump. All families here are even and radial about
//! their center, so `I` depends on `|h|` only and the `h` integral becomes
//! `ω_{d-1} ∫ I(r e₁) r^{-1-2s} dr`. That radial integral is split at
//! `|h| = 1` (graded singular quadrature inside, where `I(h) = O(|h|²)`),
//! integrated adaptively up to the outer truncation radius, and finished
//! with a tail substitution whose dyadic windows double as a divergence
//! check. Gaussian densities fail that check, as they should: their `I(h)`
//! grows like `|h|²`.
//!
//! Beyond `|h| = 1` the inner integral is evaluated in the equivalent form
//! `I(h) = ∫ f(x) (log f(x) - log f(x+h)) dx`, which avoids the overflow of
//! `e^Δ` for large jumps.

mod constants;
mod density;

use std::cell::{Cell, RefCell};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

pub use constants::{normalization_constant, normalization_constant_quadrature};
pub use density::{convolve_on_grid, DensityModel, DensitySpec, Family, TailClass, MASS_CHECK_TOLERANCE};

use crate::kernels::upsilon;
use crate::quadrature::{
    integrate_1d, integrate_2d, integrate_axis, integrate_radial_symmetric, integrate_tail, sphere_area, Axis,
    Domain2D, QuadConfig, QuadError, QuadResult, TailModel,
};
use crate::report::render_csv;

/// Above this log-ratio `f(x) Υ(Δ)` is evaluated as `e^{log f + Δ} - f (1 + Δ)`.
const LARGE_LOG_RATIO: f64 = 50.0;
/// Relative accuracy of the inner `x` integrals, as a fraction of `rel_tol`.
const INNER_TOLERANCE_FACTOR: f64 = 1e-2;
const INNER_TOLERANCE_FLOOR: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FracError {
    #[error("value out of range: {0}")]
    OutOfRange(String),
    #[error("dimension {0} is not supported")]
    UnsupportedDimension(usize),
    #[error("no closed-form convolution for {0}")]
    UnsupportedPair(String),
    #[error("integral appears divergent; dyadic window integrals {windows:?}")]
    DivergenceSuspected { windows: Vec<f64> },
    #[error("quadrature did not converge (value {}, error {})", .0.value, .0.error_estimate)]
    NonConverged(QuadResult),
    #[error("hypothesis not satisfied: {0}")]
    HypothesisViolated(String),
    #[error(transparent)]
    Quadrature(QuadError),
}

impl From<QuadError> for FracError {
    fn from(e: QuadError) -> Self {
        match e {
            QuadError::DivergenceSuspected { windows } => FracError::DivergenceSuspected { windows },
            QuadError::NonConverged(r) => FracError::NonConverged(r),
            QuadError::UnsupportedDimension(d) => FracError::UnsupportedDimension(d),
            other => FracError::Quadrature(other),
        }
    }
}

/// Dimension, order and normalization of the fractional kernel
/// `c(d,s) |h|^{-d-2s}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FracKernelSpec {
    pub d: usize,
    pub s: f64,
    pub c: f64,
}

impl FracKernelSpec {
    pub fn new(d: usize, s: f64) -> Result<Self, FracError> {
        Ok(Self {
            d,
            s,
            c: normalization_constant(d, s)?,
        })
    }

    pub fn with_order(&self, s: f64) -> Result<Self, FracError> {
        Self::new(self.d, s)
    }

    fn check_density(&self, f: &DensityModel) -> Result<(), FracError> {
        if f.d() == self.d {
            Ok(())
        } else {
            Err(FracError::OutOfRange(format!(
                "density dimension {} differs from kernel dimension {}",
                f.d(),
                self.d
            )))
        }
    }
}

#[derive(Clone, Copy)]
enum JumpForm {
    /// `f(x) Υ(Δ)`.
    Upsilon,
    /// `-f(x) Δ`; equal in integral to the `Υ` form.
    Relative,
}

fn jump_term(f: &DensityModel, x: &[f64], h: &[f64], form: JumpForm) -> f64 {
    let lf = f.log_density(x);
    let delta = f.log_ratio(x, h);
    match form {
        JumpForm::Upsilon if delta > LARGE_LOG_RATIO => (lf + delta).exp() - lf.exp() * (1.0 + delta),
        JumpForm::Upsilon => lf.exp() * upsilon(delta),
        JumpForm::Relative => -lf.exp() * delta,
    }
}

fn inner_config(cfg: &QuadConfig) -> QuadConfig {
    cfg.with_tolerances((cfg.rel_tol * INNER_TOLERANCE_FACTOR).max(INNER_TOLERANCE_FLOOR), f64::MIN_POSITIVE)
}

/// Breakpoints along the jump direction: the two peaks at `m` and `m - r`,
/// with dyadic spacing away from both when they are far apart.
fn jump_breakpoints(m: f64, r: f64, width: f64) -> Vec<f64> {
    let mut pts = vec![m, m - r];
    let mut step = width;
    while step < 0.5 * r {
        pts.push(m - step);
        pts.push(m - r + step);
        step *= 2.0;
    }
    if r > 2.0 * width {
        pts.push(m - 0.5 * r);
    }
    pts
}

/// `I(r e₁) = ∫ f(x) Υ(log f(x + r e₁) - log f(x)) dx`.
fn jump_integral(f: &DensityModel, r: f64, form: JumpForm, cfg: &QuadConfig) -> Result<QuadResult, QuadError> {
    let m = f.shift();
    let width = 4.0 * f.scale();
    let tail = f.x_tail_model();
    match f.d() {
        1 => {
            let h = [r];
            let axis = Axis::line(jump_breakpoints(m[0], r, width), width, tail);
            integrate_axis(|x: f64| jump_term(f, &[x], &h, form), &axis, cfg)
        }
        2 => {
            let h = [r, 0.0];
            let domain = Domain2D {
                x: Axis::line(jump_breakpoints(m[0], r, width), width, tail),
                y: Axis::line(vec![m[1]], width, tail),
            };
            integrate_2d(|x: f64, y: f64| jump_term(f, &[x, y], &h, form), &domain, cfg)
        }
        d => Err(QuadError::UnsupportedDimension(d)),
    }
}

/// Evaluates `I(r)` inside integrands that must return plain `f64`:
/// failures are parked and surface after the outer routine returns.
struct JumpEvaluator<'a> {
    f: &'a DensityModel,
    cfg: QuadConfig,
    failure: RefCell<Option<QuadError>>,
    worst_relative: Cell<f64>,
    all_converged: Cell<bool>,
}

impl<'a> JumpEvaluator<'a> {
    fn new(f: &'a DensityModel, cfg: &QuadConfig) -> Self {
        Self {
            f,
            cfg: inner_config(cfg),
            failure: RefCell::new(None),
            worst_relative: Cell::new(0.0),
            all_converged: Cell::new(true),
        }
    }

    fn eval(&self, r: f64, form: JumpForm) -> f64 {
        match jump_integral(self.f, r, form, &self.cfg) {
            Ok(res) => {
                if res.value != 0.0 {
                    let rel = res.error_estimate / res.value.abs();
                    self.worst_relative.set(self.worst_relative.get().max(rel));
                }
                if !res.converged {
                    self.all_converged.set(false);
                }
                res.value
            }
            Err(e) => {
                self.failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        }
    }

    fn check<T>(&self, outer: Result<T, QuadError>) -> Result<T, FracError> {
        match outer {
            Ok(v) => match self.failure.borrow_mut().take() {
                Some(e) => Err(e.into()),
                None => Ok(v),
            },
            Err(e) => Err(self.failure.borrow_mut().take().unwrap_or(e).into()),
        }
    }
}

/// Growth of `I(r)` in `r`, as the decay model of the radial tail.
fn radial_tail_model(f: &DensityModel, s: f64) -> TailModel {
    let p = match f.family() {
        Family::Cauchy { .. } => 1.0 + 2.0 * s,
        Family::ExpPower { beta, .. } => 1.0 + 2.0 * s - beta,
        Family::Gaussian { .. } => 2.0 * s - 1.0,
    };
    TailModel::Polynomial { p }
}

/// `i_s(f)` without the convergence requirement; the flag is in the result.
fn fractional_estimate(f: &DensityModel, spec: &FracKernelSpec, cfg: &QuadConfig) -> Result<QuadResult, FracError> {
    cfg.validate()?;
    spec.check_density(f)?;
    let s = spec.s;
    let omega = sphere_area(spec.d);
    let split = cfg.inner_split_radius;
    let outer = cfg.outer_truncation_radius;
    let eval = JumpEvaluator::new(f, cfg);
    let weight = |r: f64| omega * r.powf(-1.0 - 2.0 * s);

    let near = eval.check(integrate_radial_symmetric(|r| eval.eval(r, JumpForm::Upsilon), spec.d, s, cfg))?;
    let mid = eval.check(integrate_1d(|r| eval.eval(r, JumpForm::Relative) * weight(r), split, outer, cfg))?;
    let far_cfg = cfg.with_tail(radial_tail_model(f, s));
    let far = eval.check(integrate_tail(|r| eval.eval(r, JumpForm::Relative) * weight(r), outer, &far_cfg))?;

    let mut total = QuadResult::combine(&[near, mid, far]);
    total.error_estimate += eval.worst_relative.get() * total.value.abs();
    total.converged = total.converged && eval.all_converged.get();
    Ok(total.scaled(spec.c))
}

/// `i_s(f)` with its combined quadrature error.
pub fn fisher_fractional(f: &DensityModel, spec: &FracKernelSpec, cfg: &QuadConfig) -> Result<QuadResult, FracError> {
    let r = fractional_estimate(f, spec, cfg)?;
    if r.converged {
        Ok(r)
    } else {
        Err(FracError::NonConverged(r))
    }
}

/// `i(f) = ∫ f |∇ log f|²`.
pub fn fisher_classical(f: &DensityModel, cfg: &QuadConfig) -> Result<QuadResult, FracError> {
    cfg.validate()?;
    let m = f.shift().to_vec();
    let tail = f.x_tail_model();
    let res = match f.d() {
        1 => {
            let integrand = |x: f64| {
                let g = f.grad_log(&[x])[0];
                f.density(&[x]) * g * g
            };
            integrate_axis(integrand, &Axis::line(vec![m[0]], 4.0 * f.scale(), tail), cfg)?
        }
        _ => {
            let integrand = |r: f64| {
                let x = [m[0] + r, m[1]];
                let g = f.grad_log(&x);
                r * f.density(&x) * (g[0] * g[0] + g[1] * g[1])
            };
            let axis = Axis::HalfLine {
                a: 0.0,
                scale: 4.0 * f.scale(),
                singular_at_a: false,
                tail,
            };
            integrate_axis(integrand, &axis, cfg)?.scaled(sphere_area(2))
        }
    };
    Ok(res.require_converged()?)
}

/// Outcome of the Blachman–Stam comparison at one `(α, s)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BsiOutcome {
    pub alpha: f64,
    pub s: f64,
    pub i_f: QuadResult,
    pub i_g: QuadResult,
    pub i_conv: QuadResult,
    /// `α^s i_s(f) + (1-α)^s i_s(g) - i_s(f_{√α} ∗ g_{√(1-α)})`.
    pub slack: f64,
    /// Combined quadrature error of the three evaluations.
    pub error: f64,
}

impl BsiOutcome {
    pub fn holds(&self) -> bool {
        self.slack >= -self.error
    }
}

/// Slack of `i_s(f_{√α} ∗ g_{√(1-α)}) ≤ α^s i_s(f) + (1-α)^s i_s(g)`.
pub fn bsi_slack(
    f: &DensityModel,
    g: &DensityModel,
    alpha: f64,
    spec: &FracKernelSpec,
    cfg: &QuadConfig,
) -> Result<BsiOutcome, FracError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(FracError::OutOfRange(format!("alpha = {alpha} outside (0, 1)")));
    }
    let conv = f.rescale(alpha.sqrt())?.convolve(&g.rescale((1.0 - alpha).sqrt())?)?;
    let i_f = fisher_fractional(f, spec, cfg)?;
    let i_g = fisher_fractional(g, spec, cfg)?;
    let i_conv = fisher_fractional(&conv, spec, cfg)?;
    let (wf, wg) = (alpha.powf(spec.s), (1.0 - alpha).powf(spec.s));
    Ok(BsiOutcome {
        alpha,
        s: spec.s,
        i_f,
        i_g,
        i_conv,
        slack: wf * i_f.value + wg * i_g.value - i_conv.value,
        error: wf * i_f.error_estimate + wg * i_g.error_estimate + i_conv.error_estimate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingOutcome {
    pub c: f64,
    pub s: f64,
    /// `i_s(f_c) c^{2s} / i_s(f)`.
    pub ratio: f64,
    /// Propagated relative quadrature error of the ratio.
    pub error: f64,
}

/// Checks `i_s(f_c) = c^{-2s} i_s(f)` for `f_c = c^{-d} f(·/c)`.
pub fn scaling_check(f: &DensityModel, c: f64, spec: &FracKernelSpec, cfg: &QuadConfig) -> Result<ScalingOutcome, FracError> {
    let fc = f.rescale(c)?;
    let base = fisher_fractional(f, spec, cfg)?;
    let scaled = if c == 1.0 { base } else { fisher_fractional(&fc, spec, cfg)? };
    let ratio = scaled.value * c.powf(2.0 * spec.s) / base.value;
    let rel = base.error_estimate / base.value.abs() + scaled.error_estimate / scaled.value.abs();
    Ok(ScalingOutcome {
        c,
        s: spec.s,
        ratio,
        error: rel * ratio.abs(),
    })
}

/// Numerical evidence for the hypotheses of the `s → 1` limit theorem.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisCheck {
    /// Exponent and constants of the lower bound `f(x) ≥ c₀ e^{-δ|x|^β}`.
    pub beta: f64,
    pub delta: f64,
    pub c0: f64,
    /// `c₁ f(x) ≤ f(x+h) ≤ c₂ f(x)` sampled for `|x| ≥ r0`, `|h| ≤ 1`.
    pub r0: f64,
    pub c1: f64,
    pub c2: f64,
    /// `∫ f (|x - m|^β + |log f|)`.
    pub moment: f64,
    pub fisher_classical: f64,
    pub lower_bound: bool,
    pub ratio_bound: bool,
    pub moment_finite: bool,
    pub fisher_finite: bool,
}

impl HypothesisCheck {
    pub fn holds(&self) -> bool {
        self.lower_bound && self.ratio_bound && self.moment_finite && self.fisher_finite
    }
}

/// Dyadic shells `r0 2^k` used by the grid checks.
const HYPOTHESIS_SHELLS: i32 = 24;
/// Exponent used for polynomially decaying families, where any `β > 0` works.
const POLYNOMIAL_BETA: f64 = 0.5;

fn sample_directions(d: usize) -> Vec<Vec<f64>> {
    if d == 1 {
        vec![vec![1.0], vec![-1.0]]
    } else {
        vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]]
    }
}

/// Checks the hypotheses on grids and by quadrature. The constants are
/// sampled, not proven.
pub fn check_hypotheses(f: &DensityModel, cfg: &QuadConfig) -> Result<HypothesisCheck, FracError> {
    let d = f.d();
    let m = f.shift();
    let m_norm = m.iter().map(|v| v * v).sum::<f64>().sqrt();
    let (beta, delta) = match f.tail_class() {
        TailClass::Polynomial { .. } => (POLYNOMIAL_BETA, 1.0),
        TailClass::StretchedExponential { beta, rate } => (beta, 2.0 * rate),
    };
    let r0 = 2.0 * (f.scale() + m_norm);
    let dirs = sample_directions(d);

    // f(x) e^{δ|x|^β} on rays from the origin; it must stay bounded below
    // and be non-decreasing on the outermost shells.
    let mut c0 = f64::INFINITY;
    let mut lower_bound = beta > 0.0 && beta < 2.0;
    for u in &dirs {
        let mut prev = f64::NEG_INFINITY;
        for k in -8..=HYPOTHESIS_SHELLS {
            let r = r0 * 2f64.powi(k);
            let x: Vec<f64> = u.iter().map(|c| c * r).collect();
            let log_w = f.log_density(&x) + delta * r.powf(beta);
            c0 = c0.min(log_w.exp());
            if k > HYPOTHESIS_SHELLS - 4 && log_w < prev {
                lower_bound = false;
            }
            prev = log_w;
        }
        let origin = vec![0.0; d];
        c0 = c0.min(f.density(&origin));
    }
    lower_bound = lower_bound && c0 > 0.0 && c0.is_finite();

    // log f(x+h) - log f(x) for |x| ≥ r0, |h| ≤ 1; the per-shell maximum
    // must not grow on the outer shells.
    let steps: Vec<f64> = (0..=20).map(|i| -1.0 + 0.1 * i as f64).collect();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut shell_max = Vec::new();
    for k in 0..=HYPOTHESIS_SHELLS {
        let r = r0 * 2f64.powi(k);
        let mut worst = 0.0f64;
        for u in &dirs {
            let x: Vec<f64> = u.iter().zip(m).map(|(c, mv)| mv + c * r).collect();
            for v in &dirs {
                for t in &steps {
                    let h: Vec<f64> = v.iter().map(|c| c * t).collect();
                    let lr = f.log_ratio(&x, &h);
                    lo = lo.min(lr);
                    hi = hi.max(lr);
                    worst = worst.max(lr.abs());
                }
            }
        }
        shell_max.push(worst);
    }
    let mid = shell_max[shell_max.len() / 2];
    let ratio_bound = lo.is_finite() && hi.is_finite() && *shell_max.last().unwrap() <= mid * (1.0 + 1e-3);

    let moment = moment_integral(f, beta, cfg);
    let fisher = fisher_classical(f, cfg);
    Ok(HypothesisCheck {
        beta,
        delta,
        c0,
        r0,
        c1: lo.exp(),
        c2: hi.exp(),
        moment: moment.as_ref().map(|r| r.value).unwrap_or(f64::INFINITY),
        fisher_classical: fisher.as_ref().map(|r| r.value).unwrap_or(f64::INFINITY),
        lower_bound,
        ratio_bound,
        moment_finite: moment.is_ok(),
        fisher_finite: fisher.map(|r| r.value.is_finite()).unwrap_or(false),
    })
}

/// `ω_{d-1} ∫_0^∞ r^{d-1} f (r^β + |log f|) dr` about the center, with a
/// divergence-checked tail.
fn moment_integral(f: &DensityModel, beta: f64, cfg: &QuadConfig) -> Result<QuadResult, FracError> {
    let d = f.d();
    let m = f.shift().to_vec();
    let integrand = |r: f64| {
        let mut x = m.clone();
        x[0] += r;
        let lf = f.log_density(&x);
        r.powi(d as i32 - 1) * lf.exp() * (r.powf(beta) + lf.abs())
    };
    let cut = 4.0 * f.scale();
    let body = integrate_1d(integrand, 0.0, cut, cfg)?;
    let tail = integrate_tail(integrand, cut, &cfg.with_tail(f.x_tail_model()))?;
    Ok(QuadResult::combine(&[body, tail]).scaled(sphere_area(d)).require_converged()?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub s: f64,
    pub i_s: f64,
    pub quad_err: f64,
    pub i_classical: f64,
    pub deviation: f64,
    pub converged: bool,
}

/// `i_s(f)` along a grid of orders, against `i(f)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub density: DensityModel,
    pub i_classical: QuadResult,
    pub hypotheses: HypothesisCheck,
    pub rows: Vec<SweepRow>,
}

pub const SWEEP_COLUMNS: [&str; 6] = ["s", "i_s", "quad_err", "i_classical", "deviation", "converged"];

impl SweepResult {
    /// Whether `|i_s - i|` strictly decreases over the last `n` rows.
    pub fn deviation_decreasing(&self, n: usize) -> bool {
        let k = self.rows.len();
        if k < n || n < 2 {
            return false;
        }
        self.rows[k - n..].windows(2).all(|w| w[1].deviation < w[0].deviation)
    }

    pub fn all_converged(&self) -> bool {
        self.rows.iter().all(|r| r.converged)
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, crate::report::ReportError> {
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    crate::report::format_float(r.s),
                    crate::report::format_float(r.i_s),
                    crate::report::format_float(r.quad_err),
                    crate::report::format_float(r.i_classical),
                    crate::report::format_float(r.deviation),
                    r.converged.to_string(),
                ]
            })
            .collect();
        render_csv(&SWEEP_COLUMNS, rows)
    }
}

/// `i_s(f)` for each `s` in `s_grid`, after checking the hypotheses of the
/// limit theorem. Grid points are evaluated in parallel.
pub fn limit_sweep(f: &DensityModel, s_grid: &[f64], cfg: &QuadConfig) -> Result<SweepResult, FracError> {
    let hypotheses = check_hypotheses(f, cfg)?;
    if !hypotheses.holds() {
        return Err(FracError::HypothesisViolated(format!("{hypotheses:?}")));
    }
    let i_classical = fisher_classical(f, cfg)?;
    let rows = s_grid
        .par_iter()
        .map(|&s| {
            let spec = FracKernelSpec::new(f.d(), s)?;
            let r = fractional_estimate(f, &spec, cfg)?;
            Ok(SweepRow {
                s,
                i_s: r.value,
                quad_err: r.error_estimate,
                i_classical: i_classical.value,
                deviation: (r.value - i_classical.value).abs(),
                converged: r.converged,
            })
        })
        .collect::<Result<Vec<_>, FracError>>()?;
    Ok(SweepResult {
        density: f.clone(),
        i_classical,
        hypotheses,
        rows,
    })
}

/// Truncated `i_s` at increasing radii.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DivergenceProbe {
    pub s: f64,
    pub radii: Vec<f64>,
    /// `c(d,s) ∫∫_{|h| ≤ R} ...` for each radius.
    pub values: Vec<f64>,
    pub strictly_increasing: bool,
    /// Increments between consecutive radii do not shrink.
    pub increments_nondecreasing: bool,
}

/// Truncations of `i_s(f)` to `|h| ≤ R` for each `R` in `radii` (sorted,
/// all beyond `cfg.inner_split_radius`). Intended for Gaussian densities,
/// where the full integral diverges.
pub fn divergence_probe(f: &DensityModel, s: f64, radii: &[f64], cfg: &QuadConfig) -> Result<DivergenceProbe, FracError> {
    cfg.validate()?;
    let spec = FracKernelSpec::new(f.d(), s)?;
    let split = cfg.inner_split_radius;
    if radii.is_empty() || radii[0] <= split || radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(FracError::OutOfRange(format!(
            "radii {radii:?} must increase and exceed {split}"
        )));
    }
    let omega = sphere_area(f.d());
    let eval = JumpEvaluator::new(f, cfg);
    let near = eval.check(integrate_radial_symmetric(|r| eval.eval(r, JumpForm::Upsilon), f.d(), s, cfg))?;
    let mut acc = near.value;
    let mut lower = split;
    let mut values = Vec::with_capacity(radii.len());
    for &r_max in radii {
        let piece = eval.check(integrate_1d(
            |r| eval.eval(r, JumpForm::Relative) * omega * r.powf(-1.0 - 2.0 * s),
            lower,
            r_max,
            cfg,
        ))?;
        acc += piece.value;
        lower = r_max;
        values.push(spec.c * acc);
    }
    let increments: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    Ok(DivergenceProbe {
        s,
        radii: radii.to_vec(),
        strictly_increasing: increments.iter().all(|d| *d > 0.0),
        increments_nondecreasing: increments.windows(2).all(|w| w[1] >= w[0]),
        values,
    })
}
