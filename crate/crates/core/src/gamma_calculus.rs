//! Carré du champ calculus for the Laguerre and Jacobi diffusions.
//!
//! Both operators have the form `L f = a f'' + b f'` with a reversible
//! probability measure `w(x) dx`, so `Γ(f,g) = a f' g'` and
//! `i_L(f) = ∫ a (f')² / f dμ`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

use crate::quadrature::{
    integrate_2d, integrate_axis, Axis, Domain2D, QuadConfig, QuadError, QuadResult, SingularEnd, TailModel,
};

/// Allowed deviation of `∫ f dμ` from 1.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GammaError {
    #[error("x = {x} is outside the open domain")]
    OutOfDomain { x: f64 },
    #[error("invalid operator parameter: {0}")]
    InvalidParameter(String),
    #[error("function is not positive at x = {x}")]
    NonPositive { x: f64 },
    #[error("density has mass {mass} instead of 1")]
    NotNormalized { mass: f64 },
    #[error("integrand blows up near x = {at}")]
    BoundaryBlowup { at: f64 },
    #[error("quadrature did not converge (value {}, error {})", .0.value, .0.error_estimate)]
    NonConverged(QuadResult),
    #[error(transparent)]
    Quadrature(QuadError),
}

impl From<QuadError> for GammaError {
    fn from(e: QuadError) -> Self {
        match e {
            QuadError::NonFinite { at } => GammaError::BoundaryBlowup { at },
            QuadError::DivergenceSuspected { .. } => GammaError::BoundaryBlowup { at: f64::INFINITY },
            QuadError::NonConverged(r) => GammaError::NonConverged(r),
            other => GammaError::Quadrature(other),
        }
    }
}

/// Value and first two derivatives at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

/// A smooth function of one variable with exact derivatives.
#[derive(Clone)]
pub struct SmoothFunction {
    jet: Arc<dyn Fn(f64) -> Jet + Send + Sync>,
}

impl std::fmt::Debug for SmoothFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("SmoothFunction")
    }
}

impl SmoothFunction {
    pub fn new(jet: impl Fn(f64) -> Jet + Send + Sync + 'static) -> Self {
        Self { jet: Arc::new(jet) }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(move |_| Jet { value: c, d1: 0.0, d2: 0.0 })
    }

    pub fn identity() -> Self {
        Self::polynomial(vec![0.0, 1.0])
    }

    /// `Σ c_k x^k`.
    pub fn polynomial(coeffs: Vec<f64>) -> Self {
        Self::new(move |x| {
            let (mut p, mut dp, mut ddp) = (0.0, 0.0, 0.0);
            for &c in coeffs.iter().rev() {
                ddp = ddp * x + 2.0 * dp;
                dp = dp * x + p;
                p = p * x + c;
            }
            Jet { value: p, d1: dp, d2: ddp }
        })
    }

    /// `exp(Σ c_k x^k)`.
    pub fn exp_polynomial(coeffs: Vec<f64>) -> Self {
        Self::polynomial(coeffs).compose(&Self::exp())
    }

    pub fn exp() -> Self {
        Self::new(|x| {
            let e = x.exp();
            Jet { value: e, d1: e, d2: e }
        })
    }

    pub fn ln() -> Self {
        Self::new(|x| Jet {
            value: x.ln(),
            d1: 1.0 / x,
            d2: -1.0 / (x * x),
        })
    }

    pub fn jet(&self, x: f64) -> Jet {
        (self.jet)(x)
    }

    pub fn value(&self, x: f64) -> f64 {
        self.jet(x).value
    }

    /// `outer ∘ self`.
    pub fn compose(&self, outer: &SmoothFunction) -> Self {
        let (inner, outer) = (self.clone(), outer.clone());
        Self::new(move |x| {
            let f = inner.jet(x);
            let phi = outer.jet(f.value);
            Jet {
                value: phi.value,
                d1: phi.d1 * f.d1,
                d2: phi.d2 * f.d1 * f.d1 + phi.d1 * f.d2,
            }
        })
    }

    pub fn product(&self, other: &SmoothFunction) -> Self {
        let (a, b) = (self.clone(), other.clone());
        Self::new(move |x| {
            let f = a.jet(x);
            let g = b.jet(x);
            Jet {
                value: f.value * g.value,
                d1: f.d1 * g.value + f.value * g.d1,
                d2: f.d2 * g.value + 2.0 * f.d1 * g.d1 + f.value * g.d2,
            }
        })
    }

    pub fn scaled(&self, c: f64) -> Self {
        let a = self.clone();
        Self::new(move |x| {
            let f = a.jet(x);
            Jet {
                value: c * f.value,
                d1: c * f.d1,
                d2: c * f.d2,
            }
        })
    }
}

/// JSON form of the test-function families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FunctionSpec {
    Polynomial { coeffs: Vec<f64> },
    ExpPolynomial { coeffs: Vec<f64> },
}

impl FunctionSpec {
    pub fn build(&self) -> SmoothFunction {
        match self {
            FunctionSpec::Polynomial { coeffs } => SmoothFunction::polynomial(coeffs.clone()),
            FunctionSpec::ExpPolynomial { coeffs } => SmoothFunction::exp_polynomial(coeffs.clone()),
        }
    }
}

/// Value and first partial derivatives of a function of two variables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet2 {
    pub value: f64,
    pub dx: f64,
    pub dy: f64,
}

#[derive(Clone)]
pub struct SmoothFunction2D {
    jet: Arc<dyn Fn(f64, f64) -> Jet2 + Send + Sync>,
}

impl std::fmt::Debug for SmoothFunction2D {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("SmoothFunction2D")
    }
}

impl SmoothFunction2D {
    pub fn new(jet: impl Fn(f64, f64) -> Jet2 + Send + Sync + 'static) -> Self {
        Self { jet: Arc::new(jet) }
    }

    /// `(x, y) ↦ f(x) g(y)`.
    pub fn tensor(f: &SmoothFunction, g: &SmoothFunction) -> Self {
        let (f, g) = (f.clone(), g.clone());
        Self::new(move |x, y| {
            let a = f.jet(x);
            let b = g.jet(y);
            Jet2 {
                value: a.value * b.value,
                dx: a.d1 * b.value,
                dy: a.value * b.d1,
            }
        })
    }

    /// `Σ w_i F_i`.
    pub fn mixture(parts: Vec<(f64, SmoothFunction2D)>) -> Self {
        Self::new(move |x, y| {
            parts.iter().fold(Jet2 { value: 0.0, dx: 0.0, dy: 0.0 }, |acc, (w, p)| {
                let j = p.jet(x, y);
                Jet2 {
                    value: acc.value + w * j.value,
                    dx: acc.dx + w * j.dx,
                    dy: acc.dy + w * j.dy,
                }
            })
        })
    }

    pub fn jet(&self, x: f64, y: f64) -> Jet2 {
        (self.jet)(x, y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OperatorKind {
    /// `x f'' + (α - x) f'` on `(0, ∞)`.
    Laguerre { alpha: f64 },
    /// `(1 - x²) f'' - ((α + β) x + α - β) f'` on `(-1, 1)`.
    Jacobi { alpha: f64, beta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "OperatorKind", into = "OperatorKind")]
pub struct DiffusionOperator1D {
    kind: OperatorKind,
    log_norm: f64,
}

impl TryFrom<OperatorKind> for DiffusionOperator1D {
    type Error = GammaError;
    fn try_from(kind: OperatorKind) -> Result<Self, GammaError> {
        Self::new(kind)
    }
}

impl From<DiffusionOperator1D> for OperatorKind {
    fn from(op: DiffusionOperator1D) -> Self {
        op.kind
    }
}

impl DiffusionOperator1D {
    pub fn new(kind: OperatorKind) -> Result<Self, GammaError> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(GammaError::InvalidParameter(format!("{name} = {v} must be positive")))
            }
        };
        let log_norm = match kind {
            OperatorKind::Laguerre { alpha } => {
                positive("alpha", alpha)?;
                -ln_gamma(alpha)
            }
            OperatorKind::Jacobi { alpha, beta } => {
                positive("alpha", alpha)?;
                positive("beta", beta)?;
                // ∫ (1-x)^{α-1} (1+x)^{β-1} dx = 2^{α+β-1} B(α, β)
                -((alpha + beta - 1.0) * 2f64.ln() + ln_gamma(alpha) + ln_gamma(beta) - ln_gamma(alpha + beta))
            }
        };
        Ok(Self { kind, log_norm })
    }

    pub fn laguerre(alpha: f64) -> Result<Self, GammaError> {
        Self::new(OperatorKind::Laguerre { alpha })
    }

    pub fn jacobi(alpha: f64, beta: f64) -> Result<Self, GammaError> {
        Self::new(OperatorKind::Jacobi { alpha, beta })
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn domain(&self) -> (f64, f64) {
        match self.kind {
            OperatorKind::Laguerre { .. } => (0.0, f64::INFINITY),
            OperatorKind::Jacobi { .. } => (-1.0, 1.0),
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        let (lo, hi) = self.domain();
        x > lo && x < hi
    }

    fn check(&self, x: f64) -> Result<(), GammaError> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(GammaError::OutOfDomain { x })
        }
    }

    /// Diffusion coefficient `a(x)`.
    pub fn gamma_coeff(&self, x: f64) -> f64 {
        match self.kind {
            OperatorKind::Laguerre { .. } => x,
            OperatorKind::Jacobi { .. } => 1.0 - x * x,
        }
    }

    pub fn drift(&self, x: f64) -> f64 {
        match self.kind {
            OperatorKind::Laguerre { alpha } => alpha - x,
            OperatorKind::Jacobi { alpha, beta } => -((alpha + beta) * x + alpha - beta),
        }
    }

    /// Density of the reversible probability measure.
    pub fn measure_density(&self, x: f64) -> f64 {
        if !self.contains(x) {
            return 0.0;
        }
        let log_w = match self.kind {
            OperatorKind::Laguerre { alpha } => (alpha - 1.0) * x.ln() - x,
            OperatorKind::Jacobi { alpha, beta } => (alpha - 1.0) * (-x).ln_1p() + (beta - 1.0) * x.ln_1p(),
        };
        (self.log_norm + log_w).exp()
    }

    /// `(L f)(x)`.
    pub fn apply(&self, f: &SmoothFunction, x: f64) -> Result<f64, GammaError> {
        self.check(x)?;
        let j = f.jet(x);
        Ok(self.gamma_coeff(x) * j.d2 + self.drift(x) * j.d1)
    }

    /// `Γ(f, g)(x) = a(x) f'(x) g'(x)`.
    pub fn carre_du_champ(&self, f: &SmoothFunction, g: &SmoothFunction, x: f64) -> Result<f64, GammaError> {
        self.check(x)?;
        Ok(self.gamma_coeff(x) * f.jet(x).d1 * g.jet(x).d1)
    }

    /// `½ (L(fg) - g Lf - f Lg)(x)`.
    pub fn carre_du_champ_bracket(&self, f: &SmoothFunction, g: &SmoothFunction, x: f64) -> Result<f64, GammaError> {
        let lfg = self.apply(&f.product(g), x)?;
        let lf = self.apply(f, x)?;
        let lg = self.apply(g, x)?;
        Ok(0.5 * (lfg - g.value(x) * lf - f.value(x) * lg))
    }

    fn axis(&self) -> Axis {
        match self.kind {
            OperatorKind::Laguerre { .. } => Axis::HalfLine {
                a: 0.0,
                scale: 1.0,
                singular_at_a: true,
                tail: TailModel::StretchedExponential { beta: 1.0, delta: 1.0 },
            },
            OperatorKind::Jacobi { .. } => Axis::Interval {
                a: -1.0,
                b: 1.0,
                singular: SingularEnd::Both,
            },
        }
    }

    /// `∫ g dμ`.
    pub fn integrate<G: Fn(f64) -> f64>(&self, g: G, cfg: &QuadConfig) -> Result<QuadResult, GammaError> {
        let res = integrate_axis(
            |x| {
                let m = self.measure_density(x);
                if m == 0.0 {
                    0.0
                } else {
                    g(x) * m
                }
            },
            &self.axis(),
            cfg,
        )?;
        Ok(res.require_converged()?)
    }

    /// `∫∫ G d(μ ⊗ μ)`.
    pub fn integrate_product<G: Fn(f64, f64) -> f64>(&self, g: G, cfg: &QuadConfig) -> Result<QuadResult, GammaError> {
        let domain = Domain2D {
            x: self.axis(),
            y: self.axis(),
        };
        let res = integrate_2d(
            |x, y| {
                let m = self.measure_density(x) * self.measure_density(y);
                if m == 0.0 {
                    0.0
                } else {
                    g(x, y) * m
                }
            },
            &domain,
            cfg,
        )?;
        Ok(res.require_converged()?)
    }
}

/// Both expressions of the Fisher information of `f` relative to `μ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FisherGamma {
    /// `∫ Γ(f) / f dμ`.
    pub value: f64,
    pub error_estimate: f64,
    /// `∫ f Γ(log f) dμ`.
    pub log_form: f64,
}

fn fisher_from<F>(op: &DiffusionOperator1D, jet: F, cfg: &QuadConfig) -> Result<FisherGamma, GammaError>
where
    F: Fn(f64) -> (f64, f64),
{
    let negative = std::cell::Cell::new(None);
    let ratio = op.integrate(
        |x| {
            let (v, d) = jet(x);
            if v == 0.0 && d == 0.0 {
                // underflow far out in a tail
                return 0.0;
            }
            if !(v > 0.0) {
                negative.set(Some(x));
            }
            op.gamma_coeff(x) * d * d / v
        },
        cfg,
    );
    if let Some(x) = negative.get() {
        return Err(GammaError::NonPositive { x });
    }
    let ratio = ratio?;
    let log_form = op.integrate(
        |x| {
            let (v, d) = jet(x);
            if v == 0.0 {
                return 0.0;
            }
            let dlog = d / v;
            v * op.gamma_coeff(x) * dlog * dlog
        },
        cfg,
    )?;
    Ok(FisherGamma {
        value: ratio.value,
        error_estimate: ratio.error_estimate,
        log_form: log_form.value,
    })
}

fn check_mass(mass: f64) -> Result<(), GammaError> {
    if (mass - 1.0).abs() <= NORMALIZATION_TOLERANCE {
        Ok(())
    } else {
        Err(GammaError::NotNormalized { mass })
    }
}

/// `i_L(f)` for a probability density `f` relative to the operator's measure.
pub fn fisher_gamma(op: &DiffusionOperator1D, f: &SmoothFunction, cfg: &QuadConfig) -> Result<FisherGamma, GammaError> {
    check_mass(op.integrate(|x| f.value(x), cfg)?.value)?;
    fisher_from(
        op,
        |x| {
            let j = f.jet(x);
            (j.value, j.d1)
        },
        cfg,
    )
}

/// `i_{L⊕L}(F) = ∫∫ (a(x) (∂_x F)² + a(y) (∂_y F)²) / F d(μ ⊗ μ)`.
pub fn fisher_gamma_product(op: &DiffusionOperator1D, big_f: &SmoothFunction2D, cfg: &QuadConfig) -> Result<QuadResult, GammaError> {
    check_mass(op.integrate_product(|x, y| big_f.jet(x, y).value, cfg)?.value)?;
    op.integrate_product(
        |x, y| {
            let j = big_f.jet(x, y);
            if j.value == 0.0 && j.dx == 0.0 && j.dy == 0.0 {
                return 0.0;
            }
            (op.gamma_coeff(x) * j.dx * j.dx + op.gamma_coeff(y) * j.dy * j.dy) / j.value
        },
        cfg,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TensorCheck {
    pub product: f64,
    pub single: f64,
    /// `|i_{L⊕L}(f ⊗ f) - 2 i_L(f)|`.
    pub residual: f64,
    pub error_estimate: f64,
}

pub fn verify_tensor_identity(op: &DiffusionOperator1D, f: &SmoothFunction, cfg: &QuadConfig) -> Result<TensorCheck, GammaError> {
    let single = fisher_gamma(op, f, cfg)?;
    let product = fisher_gamma_product(op, &SmoothFunction2D::tensor(f, f), cfg)?;
    Ok(TensorCheck {
        product: product.value,
        single: single.value,
        residual: (product.value - 2.0 * single.value).abs(),
        error_estimate: product.error_estimate + 2.0 * single.error_estimate,
    })
}

/// `Π_μ F(x) = ∫ F(x, y) dμ(y)` and its derivative.
pub fn projection(op: &DiffusionOperator1D, big_f: &SmoothFunction2D, x: f64, cfg: &QuadConfig) -> Result<(f64, f64), GammaError> {
    let value = op.integrate(|y| big_f.jet(x, y).value, cfg)?.value;
    let deriv = op.integrate(|y| big_f.jet(x, y).dx, cfg)?.value;
    Ok((value, deriv))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProjectionCheck {
    pub product: f64,
    pub projected: f64,
    /// `i_{L⊕L}(F) - 2 i_L(Π_μ F)`.
    pub slack: f64,
    pub error_estimate: f64,
}

pub fn verify_projection_inequality(
    op: &DiffusionOperator1D,
    big_f: &SmoothFunction2D,
    cfg: &QuadConfig,
) -> Result<ProjectionCheck, GammaError> {
    let product = fisher_gamma_product(op, big_f, cfg)?;
    let failure = std::cell::RefCell::new(None);
    let projected = fisher_from(
        op,
        |x| match projection(op, big_f, x, cfg) {
            Ok(p) => p,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                (f64::NAN, f64::NAN)
            }
        },
        cfg,
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let projected = projected?;
    Ok(ProjectionCheck {
        product: product.value,
        projected: projected.value,
        slack: product.value - 2.0 * projected.value,
        error_estimate: product.error_estimate + 2.0 * projected.error_estimate,
    })
}

/// Minimum over `points` of `∫ (∂_x F)² / F dμ(y) - (∂_x Π_μ F)² / Π_μ F`.
pub fn pointwise_projection_slack(
    op: &DiffusionOperator1D,
    big_f: &SmoothFunction2D,
    points: &[f64],
    cfg: &QuadConfig,
) -> Result<f64, GammaError> {
    let mut worst = f64::INFINITY;
    for &x in points {
        op.check(x)?;
        let lhs = op
            .integrate(
                |y| {
                    let j = big_f.jet(x, y);
                    j.dx * j.dx / j.value
                },
                cfg,
            )?
            .value;
        let (p, dp) = projection(op, big_f, x, cfg)?;
        worst = worst.min(lhs - dp * dp / p);
    }
    Ok(worst)
}

/// `max_x |Γ(Φ ∘ f, g)(x) - Φ'(f(x)) Γ(f, g)(x)|`.
pub fn verify_diffusion_chain_rule(
    op: &DiffusionOperator1D,
    phi: &SmoothFunction,
    f: &SmoothFunction,
    g: &SmoothFunction,
    points: &[f64],
) -> Result<f64, GammaError> {
    let composed = f.compose(phi);
    let mut worst = 0.0f64;
    for &x in points {
        let lhs = op.carre_du_champ(&composed, g, x)?;
        let rhs = phi.jet(f.value(x)).d1 * op.carre_du_champ(f, g, x)?;
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}

/// Largest `|Γ(f,g)(x) - ½(L(fg) - g Lf - f Lg)(x)|` over `draws` random
/// polynomial or exp-polynomial pairs of degree at most 3 and random points.
pub fn random_bracket_residual(op: &DiffusionOperator1D, seed: u64, draws: usize) -> Result<f64, GammaError> {
    use rand::Rng;
    let (lo, hi) = match op.kind() {
        OperatorKind::Laguerre { .. } => (0.0, 2.0),
        OperatorKind::Jacobi { .. } => (-1.0, 1.0),
    };
    let mut worst = 0.0f64;
    for i in 0..draws {
        let mut rng = crate::markov::sample::trial_rng(seed, i as u64);
        let draw = |rng: &mut rand_chacha::ChaCha8Rng| {
            let coeffs: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
            if rng.gen_bool(0.5) {
                SmoothFunction::polynomial(coeffs)
            } else {
                SmoothFunction::exp_polynomial(coeffs.into_iter().map(|c| 0.25 * c).collect())
            }
        };
        let f = draw(&mut rng);
        let g = draw(&mut rng);
        let x = lo + (hi - lo) * rng.gen_range(0.01..0.99);
        let closed = op.carre_du_champ(&f, &g, x)?;
        let bracket = op.carre_du_champ_bracket(&f, &g, x)?;
        worst = worst.max((closed - bracket).abs());
    }
    Ok(worst)
}

/// A probability density relative to the operator's measure, used by
/// default: `x / α` for Laguerre and `1 + x` normalized for Jacobi.
pub fn reference_density(op: &DiffusionOperator1D) -> SmoothFunction {
    match op.kind() {
        OperatorKind::Laguerre { alpha } => SmoothFunction::polynomial(vec![0.0, 1.0 / alpha]),
        OperatorKind::Jacobi { alpha, beta } => {
            // E[1 + x] = 1 + (β - α) / (α + β)
            let mean = 1.0 + (beta - alpha) / (alpha + beta);
            SmoothFunction::polynomial(vec![1.0 / mean, 1.0 / mean])
        }
    }
}

/// A second density, normalized in closed form: `x² / (α(α+1))` for
/// Laguerre and `(1 + x)²` normalized for Jacobi.
pub fn reference_density_alt(op: &DiffusionOperator1D) -> SmoothFunction {
    match op.kind() {
        OperatorKind::Laguerre { alpha } => SmoothFunction::polynomial(vec![0.0, 0.0, 1.0 / (alpha * (alpha + 1.0))]),
        OperatorKind::Jacobi { alpha, beta } => {
            // with m = E[x] and v = Var x under the Beta law on (-1, 1)
            let s = alpha + beta;
            let m = (beta - alpha) / s;
            let v = 4.0 * alpha * beta / (s * s * (s + 1.0));
            let second = 1.0 + 2.0 * m + v + m * m;
            SmoothFunction::polynomial(vec![1.0 / second, 2.0 / second, 1.0 / second])
        }
    }
}

/// `½ (f ⊗ f + g ⊗ g)`, a symmetric density that is not a product.
pub fn mixture_density(f: &SmoothFunction, g: &SmoothFunction) -> SmoothFunction2D {
    SmoothFunction2D::mixture(vec![
        (0.5, SmoothFunction2D::tensor(f, f)),
        (0.5, SmoothFunction2D::tensor(g, g)),
    ])
}
