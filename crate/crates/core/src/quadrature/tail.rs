use super::adaptive::{adaptive, graded_partition, SingularEnd};
use super::{QuadConfig, QuadError, QuadResult, TailModel};

const FAR_FIELD: f64 = 1e100;

/// Estimate of `∫_a^∞ f` for `a > 0`.
///
/// Before the substituted integral is computed, `f` is integrated over the
/// dyadic windows `[a 2^k, a 2^{k+1}]`; if the last three window integrals
/// are non-decreasing in magnitude the integral is reported as
/// [`QuadError::DivergenceSuspected`].
pub fn integrate_tail<F>(f: F, a: f64, cfg: &QuadConfig) -> Result<QuadResult, QuadError>
where
    F: Fn(f64) -> f64,
{
    cfg.validate()?;
    if !(a > 0.0) || !a.is_finite() {
        return Err(QuadError::InvalidInterval { a, b: f64::INFINITY });
    }
    let windows = window_integrals(&f, a, cfg)?;
    if looks_divergent(&windows, cfg.abs_tol) {
        return Err(QuadError::DivergenceSuspected { windows });
    }
    substituted(&f, 0.0, a, cfg)
}

/// [`integrate_tail`] without the divergence check.
pub fn integrate_tail_unchecked<F>(f: F, a: f64, cfg: &QuadConfig) -> Result<QuadResult, QuadError>
where
    F: Fn(f64) -> f64,
{
    cfg.validate()?;
    if !(a > 0.0) || !a.is_finite() {
        return Err(QuadError::InvalidInterval { a, b: f64::INFINITY });
    }
    substituted(&f, 0.0, a, cfg)
}

/// `∫_{origin + a}^∞ f`, with the substitution applied to `u = x - origin`.
pub(crate) fn shifted_tail<F>(f: &F, origin: f64, a: f64, cfg: &QuadConfig) -> Result<QuadResult, QuadError>
where
    F: Fn(f64) -> f64 + ?Sized,
{
    substituted(f, origin, a, cfg)
}

fn window_integrals<F>(f: &F, a: f64, cfg: &QuadConfig) -> Result<Vec<f64>, QuadError>
where
    F: Fn(f64) -> f64 + ?Sized,
{
    let mut out = Vec::with_capacity(cfg.divergence_windows);
    let mut lo = a;
    for _ in 0..cfg.divergence_windows {
        let hi = 2.0 * lo;
        let r = adaptive(f, &[(lo, hi)], cfg, cfg.max_subdivisions)?;
        out.push(r.value);
        lo = hi;
    }
    Ok(out)
}

fn looks_divergent(windows: &[f64], abs_tol: f64) -> bool {
    let n = windows.len();
    if n < 3 {
        return false;
    }
    let w: Vec<f64> = windows[n - 3..].iter().map(|x| x.abs()).collect();
    w[0] <= w[1] && w[1] <= w[2] && w[2] > abs_tol
}

fn substituted<F>(f: &F, origin: f64, a: f64, cfg: &QuadConfig) -> Result<QuadResult, QuadError>
where
    F: Fn(f64) -> f64 + ?Sized,
{
    let g = |t: f64| -> f64 {
        let (rho, jac) = match cfg.tail_model {
            TailModel::None => (a / t, a / (t * t)),
            TailModel::Polynomial { p } => {
                let q = if p > 1.0 { (1.0 / (p - 1.0)).clamp(1.0, 16.0) } else { 16.0 };
                let rho = a * t.powf(-q);
                (rho, q * rho / t)
            }
            TailModel::StretchedExponential { beta, delta } => {
                let l = delta.powf(-1.0 / beta);
                (a + l * (1.0 - t) / t, l / (t * t))
            }
        };
        if !rho.is_finite() || rho > FAR_FIELD || !jac.is_finite() {
            return 0.0;
        }
        let fv = f(origin + rho);
        if fv == 0.0 {
            0.0
        } else {
            fv * jac
        }
    };
    let initial = graded_partition(0.0, 1.0, SingularEnd::Left);
    adaptive(&g, &initial, cfg, cfg.max_subdivisions + initial.len())
}
