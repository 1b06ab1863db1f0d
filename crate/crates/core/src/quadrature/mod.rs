//! Adaptive quadrature in one and two dimensions.
//!
//! Every routine here is built on the same panel engine: a 21-point
//! Gauss-Kronrod pair per panel, bisection of the panel with the largest
//! error estimate, and a deterministic summation order. On top of it sit
//! three specialised entry points:
//!
//! * [`integrate_tail`] maps `(a, ∞)` onto `(0, 1)` with a substitution
//!   chosen from a [`TailModel`], after checking dyadic windows for
//!   divergence;
//! * [`integrate_radial_singular`] integrates `g(h) / |h|^{d+2s}` over the
//!   ball of radius `inner_split_radius`, for `g(h) = O(|h|²)`, using
//!   geometric panel grading toward the origin and a quadratic model for
//!   the innermost ball;
//! * [`integrate_2d`] nests two axis integrations over rectangles,
//!   half-lines or full lines.

mod adaptive;
mod product;
mod radial;
mod rule;
mod tail;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use adaptive::{integrate_1d, integrate_1d_singular, SingularEnd};
pub use product::{integrate_2d, integrate_axis, Axis, Domain2D};
pub use radial::{integrate_radial_singular, integrate_radial_symmetric, sphere_area};
pub use tail::{integrate_tail, integrate_tail_unchecked};

/// Decay model for an integrand on `(a, ∞)`; picks the substitution used
/// by [`integrate_tail`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TailModel {
    /// `|f(ρ)| ≲ ρ^{-p}`.
    Polynomial { p: f64 },
    /// `|f(ρ)| ≲ exp(-δ ρ^β)`.
    StretchedExponential { beta: f64, delta: f64 },
    /// No information; uses `ρ = a / t`.
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Panel budget of a single one-dimensional adaptive run.
    pub max_subdivisions: usize,
    pub inner_split_radius: f64,
    pub outer_truncation_radius: f64,
    pub tail_model: TailModel,
    /// Number of dyadic windows `[a 2^k, a 2^{k+1}]` inspected by the
    /// divergence check of [`integrate_tail`].
    pub divergence_windows: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-14,
            max_subdivisions: 400,
            inner_split_radius: 1.0,
            outer_truncation_radius: 16.0,
            tail_model: TailModel::None,
            divergence_windows: 16,
        }
    }
}

impl QuadConfig {
    pub fn validate(&self) -> Result<(), QuadError> {
        let bad = |what: &str| Err(QuadError::InvalidConfig(what.to_string()));
        if !(self.rel_tol > 0.0) {
            return bad("rel_tol must be positive");
        }
        if !(self.abs_tol > 0.0) {
            return bad("abs_tol must be positive");
        }
        if self.max_subdivisions < 1 {
            return bad("max_subdivisions must be at least 1");
        }
        if !(self.inner_split_radius > 0.0) {
            return bad("inner_split_radius must be positive");
        }
        if !(self.outer_truncation_radius > self.inner_split_radius) {
            return bad("outer_truncation_radius must exceed inner_split_radius");
        }
        Ok(())
    }

    pub fn with_tail(&self, tail_model: TailModel) -> Self {
        Self {
            tail_model,
            ..self.clone()
        }
    }

    pub fn with_tolerances(&self, rel_tol: f64, abs_tol: f64) -> Self {
        Self {
            rel_tol,
            abs_tol,
            ..self.clone()
        }
    }

    pub(crate) fn target(&self, value: f64) -> f64 {
        (self.rel_tol * value.abs()).max(self.abs_tol)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadResult {
    pub value: f64,
    pub error_estimate: f64,
    pub subdivisions_used: usize,
    pub converged: bool,
}

impl QuadResult {
    pub fn zero() -> Self {
        Self {
            value: 0.0,
            error_estimate: 0.0,
            subdivisions_used: 0,
            converged: true,
        }
    }

    /// Turns an unconverged estimate into [`QuadError::NonConverged`].
    pub fn require_converged(self) -> Result<Self, QuadError> {
        if self.converged {
            Ok(self)
        } else {
            Err(QuadError::NonConverged(self))
        }
    }

    /// Sum of independent pieces; errors add.
    pub fn combine(parts: &[QuadResult]) -> Self {
        parts.iter().fold(Self::zero(), |acc, p| Self {
            value: acc.value + p.value,
            error_estimate: acc.error_estimate + p.error_estimate,
            subdivisions_used: acc.subdivisions_used + p.subdivisions_used,
            converged: acc.converged && p.converged,
        })
    }

    pub fn scaled(self, factor: f64) -> Self {
        Self {
            value: self.value * factor,
            error_estimate: self.error_estimate * factor.abs(),
            ..self
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadError {
    #[error("invalid quadrature configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid integration interval [{a}, {b}]")]
    InvalidInterval { a: f64, b: f64 },
    #[error("integrand is not finite at x = {at}")]
    NonFinite { at: f64 },
    #[error("subdivision budget exhausted (value {}, error {})", .0.value, .0.error_estimate)]
    NonConverged(QuadResult),
    #[error("tail integral appears divergent; dyadic window integrals {windows:?}")]
    DivergenceSuspected { windows: Vec<f64> },
    #[error("integrand is not O(|h|^2) at the origin; g(h)/|h|^2 samples {samples:?}")]
    SingularityNotCancelled { samples: Vec<f64> },
    #[error("dimension {0} is not supported")]
    UnsupportedDimension(usize),
}
