use std::f64::consts::PI;

use statrs::function::gamma::gamma;

use super::FracError;
use crate::quadrature::{
    integrate_1d, integrate_axis, integrate_radial_symmetric, integrate_tail, Axis, QuadConfig, QuadResult, TailModel,
};

/// Upper end of the oscillatory segment integrated panel by panel.
const OSCILLATORY_CUTOFF: f64 = 64.0 * PI;
const ASYMPTOTIC_TERMS: usize = 12;

fn check(d: usize, s: f64) -> Result<(), FracError> {
    if d == 0 || d > 2 {
        return Err(FracError::UnsupportedDimension(d));
    }
    if !(s > 0.0 && s < 1.0) {
        return Err(FracError::OutOfRange(format!("order s = {s} outside (0, 1)")));
    }
    Ok(())
}

/// `c(d,s) = (∫ (1 - cos ξ₁) |ξ|^{-d-2s} dξ)^{-1}`, in closed form
/// `s 4^s Γ((d+2s)/2) / (π^{d/2} Γ(1-s))`.
pub fn normalization_constant(d: usize, s: f64) -> Result<f64, FracError> {
    check(d, s)?;
    let half = d as f64 / 2.0;
    Ok(s * 4f64.powf(s) * gamma(half + s) / (PI.powf(half) * gamma(1.0 - s)))
}

/// `c(d,s)` from direct quadrature of its defining integral.
///
/// The `ξ₂` direction factors out for `d = 2`, leaving
/// `J₁(s) = ∫ (1 - cos t) |t|^{-1-2s} dt` and `J₂(s) = ∫ (1 + u²)^{-1-s} du`.
pub fn normalization_constant_quadrature(d: usize, s: f64, cfg: &QuadConfig) -> Result<QuadResult, FracError> {
    check(d, s)?;
    let j1 = cosine_integral(s, cfg)?;
    let inverse = if d == 1 {
        j1
    } else {
        let axis = Axis::line(vec![0.0], 4.0, TailModel::Polynomial { p: 2.0 + 2.0 * s });
        let j2 = integrate_axis(|u: f64| (1.0 + u * u).powf(-1.0 - s), &axis, cfg)?;
        QuadResult {
            value: j1.value * j2.value,
            error_estimate: j1.error_estimate * j2.value + j1.value * j2.error_estimate,
            subdivisions_used: j1.subdivisions_used + j2.subdivisions_used,
            converged: j1.converged && j2.converged,
        }
    };
    Ok(QuadResult {
        value: 1.0 / inverse.value,
        error_estimate: inverse.error_estimate / (inverse.value * inverse.value),
        ..inverse
    })
}

/// `∫_ℝ (1 - cos t) |t|^{-1-2s} dt`.
fn cosine_integral(s: f64, cfg: &QuadConfig) -> Result<QuadResult, FracError> {
    let p = 1.0 + 2.0 * s;
    let inner_cfg = QuadConfig {
        inner_split_radius: 1.0,
        ..cfg.clone()
    };
    let one_minus_cos = |t: f64| 2.0 * (0.5 * t).sin().powi(2);
    let inner = integrate_radial_symmetric(one_minus_cos, 1, s, &inner_cfg)?;
    let wide_cfg = QuadConfig {
        max_subdivisions: cfg.max_subdivisions.max(2000),
        ..cfg.clone()
    };
    let middle = integrate_1d(|t: f64| one_minus_cos(t) * t.powf(-p), 1.0, OSCILLATORY_CUTOFF, &wide_cfg)?.scaled(2.0);
    let power_tail = integrate_tail(|t: f64| t.powf(-p), OSCILLATORY_CUTOFF, &cfg.with_tail(TailModel::Polynomial { p }))?
        .scaled(2.0);
    let (cos_tail, cos_err) = oscillatory_tail(p, OSCILLATORY_CUTOFF);
    let mut total = QuadResult::combine(&[inner, middle, power_tail]);
    total.value -= 2.0 * cos_tail;
    total.error_estimate += 2.0 * cos_err;
    Ok(total)
}

/// `∫_A^∞ cos(t) t^{-p} dt` by repeated integration by parts:
/// `∫_A^∞ e^{it} t^{-p} dt ~ i e^{iA} A^{-p} Σ_k (-i)^k (p)_k A^{-k}`.
/// Returns the value and the size of the first omitted term.
fn oscillatory_tail(p: f64, a: f64) -> (f64, f64) {
    let (mut re, mut im) = (0.0, 0.0);
    let mut coef = 1.0;
    // (-i)^k cycles through 1, -i, -1, i
    for k in 0..ASYMPTOTIC_TERMS {
        let (cr, ci) = match k % 4 {
            0 => (coef, 0.0),
            1 => (0.0, -coef),
            2 => (-coef, 0.0),
            _ => (0.0, coef),
        };
        re += cr;
        im += ci;
        coef *= (p + k as f64) / a;
    }
    let scale = a.powf(-p);
    // real part of i (cos A + i sin A)(re + i im)
    let (c, s) = (a.cos(), a.sin());
    let prod_im = c * im + s * re;
    (-prod_im * scale, coef * scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_values() {
        assert!((normalization_constant(1, 0.5).unwrap() - 1.0 / PI).abs() < 1e-15);
        assert!((normalization_constant(2, 0.5).unwrap() - 0.5 / PI).abs() < 1e-15);
        let s = 1.0 - 1e-7;
        assert!((normalization_constant(1, s).unwrap() / (1.0 - s) - 2.0).abs() < 1e-5);
        assert!((normalization_constant(2, s).unwrap() / (1.0 - s) - 4.0 / PI).abs() < 1e-5);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(matches!(normalization_constant(3, 0.5), Err(FracError::UnsupportedDimension(3))));
        assert!(matches!(normalization_constant(1, 1.0), Err(FracError::OutOfRange(_))));
        assert!(matches!(normalization_constant(1, 0.0), Err(FracError::OutOfRange(_))));
    }

    #[test]
    fn oscillatory_tail_against_quadrature() {
        // ∫_A^B cos t t^{-p} over many periods plus the tail from B
        let p = 1.6;
        let a = OSCILLATORY_CUTOFF;
        let b = 4.0 * a;
        let cfg = QuadConfig {
            max_subdivisions: 4000,
            ..QuadConfig::default().with_tolerances(1e-13, 1e-16)
        };
        let seg = integrate_1d(|t: f64| t.cos() * t.powf(-p), a, b, &cfg).unwrap();
        let (from_a, _) = oscillatory_tail(p, a);
        let (from_b, _) = oscillatory_tail(p, b);
        assert!((from_a - (seg.value + from_b)).abs() < 1e-13);
    }

    #[test]
    fn quadrature_matches_closed_form() {
        let cfg = QuadConfig::default().with_tolerances(1e-10, 1e-15);
        for d in [1, 2] {
            for s in [0.25, 0.5, 0.75, 0.95] {
                let q = normalization_constant_quadrature(d, s, &cfg).unwrap();
                let c = normalization_constant(d, s).unwrap();
                assert!(q.converged);
                assert!(((q.value - c) / c).abs() < 1e-8, "d={d} s={s}: {} vs {c}", q.value);
            }
        }
    }
}
