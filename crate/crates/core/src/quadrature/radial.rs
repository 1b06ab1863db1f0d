use std::f64::consts::PI;

use super::adaptive::adaptive;
use super::{QuadConfig, QuadError, QuadResult};

const MAX_LEVELS: usize = 400;
const MIN_LEVELS: usize = 4;
const GROWTH_FACTOR: f64 = 1.5;
const GROWTH_RUN: usize = 3;

/// Surface area `ω_{d-1}` of the unit sphere in `ℝ^d`.
pub fn sphere_area(d: usize) -> f64 {
    if d == 0 {
        return 0.0;
    }
    let half = d as f64 / 2.0;
    2.0 * PI.powf(half) / statrs::function::gamma::gamma(half)
}

/// `∫_{|h| ≤ R} g(h) |h|^{-d-2s} dh` with `R = cfg.inner_split_radius`, for
/// `g(h) = O(|h|²)`.
///
/// The radial variable is cut into dyadic shells `[R 2^{-k-1}, R 2^{-k}]`.
/// Refinement stops once the ratio `Q_k = G(r_k) / r_k²` has settled; the
/// innermost ball is then integrated against the model `G(r) ≈ Q_K r²`.
/// Here `G` is the spherical integral of `g` (`g(r) + g(-r)` for `d = 1`).
pub fn integrate_radial_singular<G>(g: G, d: usize, s: f64, cfg: &QuadConfig) -> Result<QuadResult, QuadError>
where
    G: Fn(&[f64]) -> f64,
{
    cfg.validate()?;
    check_order(s)?;
    match d {
        1 => {
            let shell = |r: f64| Ok(g(&[r]) + g(&[-r]));
            graded_radial(&shell, s, cfg)
        }
        2 => {
            let angular_cfg = cfg.clone();
            let shell = |r: f64| -> Result<f64, QuadError> {
                let ring = |theta: f64| g(&[r * theta.cos(), r * theta.sin()]);
                let res = adaptive(&ring, &[(0.0, PI), (PI, 2.0 * PI)], &angular_cfg, angular_cfg.max_subdivisions)?;
                Ok(res.value)
            };
            graded_radial(&shell, s, cfg)
        }
        other => Err(QuadError::UnsupportedDimension(other)),
    }
}

/// Radial version of [`integrate_radial_singular`] for `g(h) = profile(|h|)`:
/// `ω_{d-1} ∫_0^R profile(r) r^{-1-2s} dr`.
pub fn integrate_radial_symmetric<P>(profile: P, d: usize, s: f64, cfg: &QuadConfig) -> Result<QuadResult, QuadError>
where
    P: Fn(f64) -> f64,
{
    cfg.validate()?;
    check_order(s)?;
    if d == 0 || d > 2 {
        return Err(QuadError::UnsupportedDimension(d));
    }
    let omega = sphere_area(d);
    let shell = |r: f64| Ok(omega * profile(r));
    graded_radial(&shell, s, cfg)
}

fn check_order(s: f64) -> Result<(), QuadError> {
    if s > 0.0 && s < 1.0 {
        Ok(())
    } else {
        Err(QuadError::InvalidConfig(format!("order s = {s} outside (0, 1)")))
    }
}

/// `∫_0^R G(r) r^{-1-2s} dr` where `G(r) = O(r²)`.
fn graded_radial<S>(shell: &S, s: f64, cfg: &QuadConfig) -> Result<QuadResult, QuadError>
where
    S: Fn(f64) -> Result<f64, QuadError>,
{
    let big_r = cfg.inner_split_radius;
    let power = 2.0 - 2.0 * s;
    let failure: std::cell::RefCell<Option<QuadError>> = std::cell::RefCell::new(None);
    let integrand = |r: f64| -> f64 {
        match shell(r) {
            Ok(v) => v * r.powf(-1.0 - 2.0 * s),
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        }
    };

    let mut parts: Vec<QuadResult> = Vec::new();
    let mut samples: Vec<f64> = Vec::new();
    let mut growth_run = 0;
    let mut r_k = big_r;
    let q0 = shell(r_k)? / (r_k * r_k);
    check_finite(q0, r_k)?;
    samples.push(q0);

    for level in 0..MAX_LEVELS {
        let r_next = 0.5 * r_k;
        let piece = match adaptive(&integrand, &[(r_next, r_k)], cfg, cfg.max_subdivisions) {
            Ok(p) => p,
            Err(e) => return Err(failure.borrow_mut().take().unwrap_or(e)),
        };
        parts.push(piece);
        r_k = r_next;

        let q = shell(r_k)? / (r_k * r_k);
        check_finite(q, r_k)?;
        let prev = *samples.last().unwrap();
        if q.abs() > GROWTH_FACTOR * prev.abs() {
            growth_run += 1;
        } else {
            growth_run = 0;
        }
        samples.push(q);
        if growth_run >= GROWTH_RUN {
            return Err(QuadError::SingularityNotCancelled { samples });
        }

        let ball = r_k.powf(power) / power;
        let remainder_err = (q - prev).abs() * ball;
        let so_far: f64 = parts.iter().map(|p| p.value).sum::<f64>() + q * ball;
        if level + 1 >= MIN_LEVELS && remainder_err <= 0.1 * cfg.target(so_far) {
            let mut total = QuadResult::combine(&parts);
            total.value += q * ball;
            total.error_estimate += remainder_err;
            total.converged = total.converged && total.error_estimate <= cfg.target(total.value);
            return Ok(total);
        }
    }

    let q = *samples.last().unwrap();
    let prev = samples[samples.len() - 2];
    let ball = r_k.powf(power) / power;
    let mut total = QuadResult::combine(&parts);
    total.value += q * ball;
    total.error_estimate += (q - prev).abs() * ball;
    total.converged = false;
    Ok(total)
}

fn check_finite(q: f64, r: f64) -> Result<(), QuadError> {
    if q.is_finite() {
        Ok(())
    } else {
        Err(QuadError::NonFinite { at: r })
    }
}
