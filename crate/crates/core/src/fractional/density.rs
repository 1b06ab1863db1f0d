use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::FracError;
use crate::quadrature::{integrate_axis, sphere_area, Axis, QuadConfig, TailModel};

/// Tolerance of the mass check performed at construction.
pub const MASS_CHECK_TOLERANCE: f64 = 1e-8;

/// Closed-form density families on `ℝ^d`, all even about their center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    /// `Γ((d+1)/2) π^{-(d+1)/2} γ / (γ² + |x|²)^{(d+1)/2}`.
    Cauchy { gamma: f64 },
    /// `Z^{-1} exp(-δ (1 + |x/λ|²)^{β/2})` with `β ∈ (0, 2)`.
    ExpPower {
        beta: f64,
        delta: f64,
        #[serde(default = "unit")]
        lambda: f64,
    },
    /// Centered normal with covariance `σ² I`.
    Gaussian { sigma: f64 },
}

fn unit() -> f64 {
    1.0
}

/// How `f(x)` behaves as `|x| → ∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TailClass {
    /// `f(x) ~ |x|^{-exponent}`.
    Polynomial { exponent: f64 },
    /// `f(x) ~ exp(-rate |x|^beta)`.
    StretchedExponential { beta: f64, rate: f64 },
}

/// A density from [`Family`], shifted to `shift`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DensitySpec", into = "DensitySpec")]
pub struct DensityModel {
    family: Family,
    d: usize,
    shift: Vec<f64>,
    log_norm: f64,
}

/// JSON form `{"family": .., "d": .., "params": {..}, "shift": [..]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensitySpec {
    pub family: String,
    pub d: usize,
    pub params: serde_json::Map<String, serde_json::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift: Option<Vec<f64>>,
}

impl TryFrom<DensitySpec> for DensityModel {
    type Error = FracError;
    fn try_from(spec: DensitySpec) -> Result<Self, Self::Error> {
        let mut tagged = spec.params.clone();
        tagged.insert("family".into(), serde_json::Value::String(spec.family.clone()));
        let family: Family = serde_json::from_value(serde_json::Value::Object(tagged))
            .map_err(|e| FracError::OutOfRange(format!("density parameters: {e}")))?;
        let model = DensityModel::new(family, spec.d)?;
        match spec.shift {
            Some(m) => model.shifted(&m),
            None => Ok(model),
        }
    }
}

impl From<DensityModel> for DensitySpec {
    fn from(m: DensityModel) -> Self {
        let mut params = match serde_json::to_value(m.family) {
            Ok(serde_json::Value::Object(map)) => map,
            _ => serde_json::Map::new(),
        };
        let family = params
            .remove("family")
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default();
        let shift = if m.shift.iter().all(|v| *v == 0.0) { None } else { Some(m.shift) };
        DensitySpec {
            family,
            d: m.d,
            params,
            shift,
        }
    }
}

impl DensityModel {
    /// Centered density; validates parameters and unit mass.
    pub fn new(family: Family, d: usize) -> Result<Self, FracError> {
        if d == 0 || d > 2 {
            return Err(FracError::UnsupportedDimension(d));
        }
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(FracError::OutOfRange(format!("{name} = {v} must be positive")))
            }
        };
        let log_norm = match family {
            Family::Cauchy { gamma } => {
                positive("gamma", gamma)?;
                let a = (d as f64 + 1.0) / 2.0;
                ln_gamma(a) - a * PI.ln() + gamma.ln()
            }
            Family::Gaussian { sigma } => {
                positive("sigma", sigma)?;
                -(d as f64) * (sigma * (2.0 * PI).sqrt()).ln()
            }
            Family::ExpPower { beta, delta, lambda } => {
                positive("delta", delta)?;
                positive("lambda", lambda)?;
                if !(beta > 0.0 && beta < 2.0) {
                    return Err(FracError::OutOfRange(format!("beta = {beta} outside (0, 2)")));
                }
                0.0
            }
        };
        let mut model = Self {
            family,
            d,
            shift: vec![0.0; d],
            log_norm,
        };
        if let Family::ExpPower { .. } = family {
            let z = model.radial_mass(&QuadConfig::default().with_tolerances(1e-13, 1e-300))?;
            model.log_norm = -z.ln();
        }
        let mass = model.radial_mass(&QuadConfig::default())?;
        if (mass - 1.0).abs() > MASS_CHECK_TOLERANCE {
            return Err(FracError::OutOfRange(format!("density mass {mass} differs from 1")));
        }
        Ok(model)
    }

    pub fn cauchy(gamma: f64, d: usize) -> Result<Self, FracError> {
        Self::new(Family::Cauchy { gamma }, d)
    }

    pub fn gaussian(sigma: f64, d: usize) -> Result<Self, FracError> {
        Self::new(Family::Gaussian { sigma }, d)
    }

    pub fn exp_power(beta: f64, delta: f64, d: usize) -> Result<Self, FracError> {
        Self::new(Family::ExpPower { beta, delta, lambda: 1.0 }, d)
    }

    /// The same density translated to `shift`.
    pub fn shifted(&self, shift: &[f64]) -> Result<Self, FracError> {
        if shift.len() != self.d || shift.iter().any(|v| !v.is_finite()) {
            return Err(FracError::OutOfRange(format!("shift {shift:?} for d = {}", self.d)));
        }
        Ok(Self {
            shift: shift.to_vec(),
            ..self.clone()
        })
    }

    /// `∫ f` over `ℝ^d` computed in polar form about the center.
    fn radial_mass(&self, cfg: &QuadConfig) -> Result<f64, FracError> {
        let d = self.d;
        let profile = |r: f64| r.powi(d as i32 - 1) * (self.log_norm + self.log_profile(r * r)).exp();
        let axis = Axis::HalfLine {
            a: 0.0,
            scale: 4.0 * self.scale(),
            singular_at_a: false,
            tail: self.x_tail_model(),
        };
        let r = integrate_axis(profile, &axis, cfg)?;
        Ok(sphere_area(d) * r.value)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn shift(&self) -> &[f64] {
        &self.shift
    }

    /// `log f` at the center minus `log f(x)` depends only on `u = |x - m|²`;
    /// this is the unnormalized `log f` as a function of `u`.
    fn log_profile(&self, u: f64) -> f64 {
        let d = self.d as f64;
        match self.family {
            Family::Cauchy { gamma } => -0.5 * (d + 1.0) * (gamma * gamma + u).ln(),
            Family::Gaussian { sigma } => -u / (2.0 * sigma * sigma),
            Family::ExpPower { beta, delta, lambda } => -delta * (1.0 + u / (lambda * lambda)).powf(0.5 * beta),
        }
    }

    fn centered_sq(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.shift).map(|(a, m)| (a - m) * (a - m)).sum()
    }

    pub fn log_density(&self, x: &[f64]) -> f64 {
        self.log_norm + self.log_profile(self.centered_sq(x))
    }

    pub fn density(&self, x: &[f64]) -> f64 {
        self.log_density(x).exp()
    }

    /// `∇ log f(x)`.
    pub fn grad_log(&self, x: &[f64]) -> Vec<f64> {
        let u = self.centered_sq(x);
        let factor = match self.family {
            Family::Cauchy { gamma } => -(self.d as f64 + 1.0) / (gamma * gamma + u),
            Family::Gaussian { sigma } => -1.0 / (sigma * sigma),
            Family::ExpPower { beta, delta, lambda } => {
                let l2 = lambda * lambda;
                -delta * beta * (1.0 + u / l2).powf(0.5 * beta - 1.0) / l2
            }
        };
        x.iter().zip(&self.shift).map(|(a, m)| factor * (a - m)).collect()
    }

    /// `log f(x + h) - log f(x)`, evaluated without cancellation for small `h`.
    pub fn log_ratio(&self, x: &[f64], h: &[f64]) -> f64 {
        let mut u = 0.0;
        let mut du = 0.0;
        let mut u_moved = 0.0;
        for ((a, m), hv) in x.iter().zip(&self.shift).zip(h) {
            let y = a - m;
            u += y * y;
            du += hv * (2.0 * y + hv);
            u_moved += (y + hv) * (y + hv);
        }
        // log((c + u + du) / (c + u)); the direct quotient is exact enough
        // once the relative change is large
        let log_quotient = |c: f64| {
            let rel = du / (c + u);
            if rel > -0.5 {
                rel.ln_1p()
            } else {
                ((c + u_moved) / (c + u)).ln()
            }
        };
        let d = self.d as f64;
        match self.family {
            Family::Cauchy { gamma } => -0.5 * (d + 1.0) * log_quotient(gamma * gamma),
            Family::Gaussian { sigma } => -du / (2.0 * sigma * sigma),
            Family::ExpPower { beta, delta, lambda } => {
                let l2 = lambda * lambda;
                let base = 1.0 + u / l2;
                -delta * base.powf(0.5 * beta) * (0.5 * beta * log_quotient(l2)).exp_m1()
            }
        }
    }

    /// Characteristic length of the family.
    pub fn scale(&self) -> f64 {
        match self.family {
            Family::Cauchy { gamma } => gamma,
            Family::Gaussian { sigma } => sigma,
            Family::ExpPower { beta, delta, lambda } => lambda * delta.powf(-1.0 / beta).max(1.0),
        }
    }

    pub fn tail_class(&self) -> TailClass {
        match self.family {
            Family::Cauchy { .. } => TailClass::Polynomial {
                exponent: self.d as f64 + 1.0,
            },
            Family::Gaussian { sigma } => TailClass::StretchedExponential {
                beta: 2.0,
                rate: 1.0 / (2.0 * sigma * sigma),
            },
            Family::ExpPower { beta, delta, lambda } => TailClass::StretchedExponential {
                beta,
                rate: delta * lambda.powf(-beta),
            },
        }
    }

    /// Decay model for integrands in `x` dominated by `f`.
    pub fn x_tail_model(&self) -> TailModel {
        match self.tail_class() {
            TailClass::Polynomial { exponent } => TailModel::Polynomial { p: exponent },
            TailClass::StretchedExponential { beta, rate } => TailModel::StretchedExponential { beta, delta: rate },
        }
    }

    pub fn supports_closed_convolution(&self) -> bool {
        matches!(self.family, Family::Cauchy { .. } | Family::Gaussian { .. })
    }

    /// `f_c(x) = c^{-d} f(x / c)`.
    pub fn rescale(&self, c: f64) -> Result<Self, FracError> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(FracError::OutOfRange(format!("scale factor {c} must be positive")));
        }
        if c == 1.0 {
            return Ok(self.clone());
        }
        let family = match self.family {
            Family::Cauchy { gamma } => Family::Cauchy { gamma: c * gamma },
            Family::Gaussian { sigma } => Family::Gaussian { sigma: c * sigma },
            Family::ExpPower { beta, delta, lambda } => Family::ExpPower {
                beta,
                delta,
                lambda: c * lambda,
            },
        };
        let shift: Vec<f64> = self.shift.iter().map(|m| c * m).collect();
        Self::new(family, self.d)?.shifted(&shift)
    }

    /// Closed-form `f ∗ g` for Cauchy–Cauchy and Gaussian–Gaussian pairs.
    pub fn convolve(&self, other: &DensityModel) -> Result<Self, FracError> {
        if self.d != other.d {
            return Err(FracError::UnsupportedPair(format!("dimensions {} and {}", self.d, other.d)));
        }
        let family = match (self.family, other.family) {
            (Family::Cauchy { gamma: a }, Family::Cauchy { gamma: b }) => Family::Cauchy { gamma: a + b },
            (Family::Gaussian { sigma: a }, Family::Gaussian { sigma: b }) => Family::Gaussian { sigma: a.hypot(b) },
            (a, b) => return Err(FracError::UnsupportedPair(format!("{a:?} and {b:?}"))),
        };
        let shift: Vec<f64> = self.shift.iter().zip(&other.shift).map(|(a, b)| a + b).collect();
        Self::new(family, self.d)?.shifted(&shift)
    }
}

/// Trapezoid approximation of `(f ∗ g)(x)` on `[-half_width, half_width]`
/// with `n` intervals, for one-dimensional densities.
pub fn convolve_on_grid(f: &DensityModel, g: &DensityModel, x: f64, half_width: f64, n: usize) -> Result<f64, FracError> {
    if f.d() != 1 || g.d() != 1 {
        return Err(FracError::UnsupportedDimension(f.d().max(g.d())));
    }
    if n == 0 || !(half_width > 0.0) {
        return Err(FracError::OutOfRange("grid needs n > 0 and a positive width".into()));
    }
    let step = 2.0 * half_width / n as f64;
    let mut acc = 0.0;
    for i in 0..=n {
        let y = -half_width + i as f64 * step;
        let w = if i == 0 || i == n { 0.5 } else { 1.0 };
        acc += w * f.density(&[y]) * g.density(&[x - y]);
    }
    Ok(acc * step)
}
