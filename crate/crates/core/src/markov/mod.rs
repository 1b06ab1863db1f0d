//! Finite Markov triples `(M, k, μ)`.
//!
//! For a strictly positive density `f` with respect to `μ` this module
//! computes the nonlocal Fisher information
//! `i_k(f) = Σ_x f(x) Ψ_Υ(log f)(x) μ(x)`, the entropy
//! `h(f) = Σ_x f log f μ`, and the heat semigroup `P_t = exp(tL)`. Along
//! `P_t` on a reversible chain, `∂_t h(P_t f) = -i_k(P_t f)`.
//!
//! On the product chain with kernel `k ⊕ k` and measure `μ ⊗ μ`, `i_k`
//! lifts: `i_{k⊕k}(f ⊗ f) = 2 i_k(f)` and `i_{k⊕k}(F) ≥ 2 i_k(Π_μ F)` for
//! symmetric `F`. The entropy lifts in the same way.

mod expm;
pub mod sample;
pub mod suite;

pub use expm::expm;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernels::{self, FiniteKernel, KernelError, ProductIndex, WeightedMeasure};

/// Tolerance on `Σ f μ = 1` accepted by the density constructors.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// Relative detailed-balance defect accepted for a chain declared reversible.
pub const BALANCE_TOLERANCE: f64 = 1e-10;

/// Mass drift tolerated in the output of [`heat_flow`].
pub const FLOW_MASS_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MarkovError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("density value {value} at state {index} is not strictly positive")]
    NonPositiveDensity { index: usize, value: f64 },
    #[error("total mass {mass} differs from 1")]
    NotNormalized { mass: f64 },
    #[error("chain is not reversible (detailed-balance defect {defect})")]
    NotReversible { defect: f64 },
    #[error("lifted density is not symmetric")]
    NotSymmetric,
    #[error("negative time {0}")]
    NegativeTime(f64),
    #[error("time step {0} must be positive")]
    InvalidStep(f64),
}

/// Jump kernel, reference measure and (validated) reversibility flag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ChainSpec", into = "ChainSpec")]
pub struct ChainModel {
    kernel: FiniteKernel,
    mu: WeightedMeasure,
    reversible: bool,
}

/// JSON form `{"n": .., "rates": [[..]], "mu": [..]}`. When `reversible` is
/// absent it is inferred from detailed balance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    pub n: usize,
    pub rates: Vec<Vec<f64>>,
    pub mu: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reversible: Option<bool>,
}

impl TryFrom<ChainSpec> for ChainModel {
    type Error = MarkovError;
    fn try_from(spec: ChainSpec) -> Result<Self, Self::Error> {
        if spec.rates.len() != spec.n {
            return Err(KernelError::DimensionMismatch {
                expected: spec.n,
                found: spec.rates.len(),
            }
            .into());
        }
        let kernel = FiniteKernel::new(spec.rates)?;
        let mu = WeightedMeasure::new(spec.mu)?;
        match spec.reversible {
            Some(flag) => ChainModel::new(kernel, mu, flag),
            None => ChainModel::detect(kernel, mu),
        }
    }
}

impl From<ChainModel> for ChainSpec {
    fn from(c: ChainModel) -> Self {
        ChainSpec {
            n: c.n(),
            rates: c.kernel.to_dense(),
            mu: c.mu.weights().to_vec(),
            reversible: Some(c.reversible),
        }
    }
}

impl ChainModel {
    /// Builds a chain; `reversible = true` is checked against detailed balance.
    pub fn new(kernel: FiniteKernel, mu: WeightedMeasure, reversible: bool) -> Result<Self, MarkovError> {
        let defect = kernel.detailed_balance_defect(&mu)?;
        if reversible && defect > BALANCE_TOLERANCE {
            return Err(MarkovError::NotReversible { defect });
        }
        Ok(Self { kernel, mu, reversible })
    }

    /// Builds a chain, setting the flag from detailed balance.
    pub fn detect(kernel: FiniteKernel, mu: WeightedMeasure) -> Result<Self, MarkovError> {
        let defect = kernel.detailed_balance_defect(&mu)?;
        Ok(Self {
            kernel,
            mu,
            reversible: defect <= BALANCE_TOLERANCE,
        })
    }

    pub fn n(&self) -> usize {
        self.kernel.n()
    }

    pub fn kernel(&self) -> &FiniteKernel {
        &self.kernel
    }

    pub fn mu(&self) -> &WeightedMeasure {
        &self.mu
    }

    pub fn reversible(&self) -> bool {
        self.reversible
    }

    /// Generator matrix `Q` with `Q[x][y] = k(x,y)` off the diagonal and
    /// zero row sums, so that `(Q f)(x) = L f(x)`.
    pub fn generator_matrix(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut q = DMatrix::<f64>::zeros(n, n);
        for x in 0..n {
            let mut exit = 0.0;
            for (y, r) in self.kernel.row(x) {
                q[(x, y)] = r;
                exit += r;
            }
            q[(x, x)] = -exit;
        }
        q
    }

    fn require_reversible(&self) -> Result<(), MarkovError> {
        if self.reversible {
            Ok(())
        } else {
            Err(MarkovError::NotReversible {
                defect: self.kernel.detailed_balance_defect(&self.mu)?,
            })
        }
    }
}

/// Strictly positive probability density with respect to `μ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteDensity {
    values: Vec<f64>,
}

impl DiscreteDensity {
    pub fn new(values: Vec<f64>, mu: &WeightedMeasure) -> Result<Self, MarkovError> {
        Self::with_tolerance(values, mu, MASS_TOLERANCE)
    }

    /// Rescales positive `values` to unit mass.
    pub fn normalized(values: Vec<f64>, mu: &WeightedMeasure) -> Result<Self, MarkovError> {
        check_positive(&values)?;
        let mass = mu.integrate(&values)?;
        Self::new(values.into_iter().map(|v| v / mass).collect(), mu)
    }

    pub fn uniform(mu: &WeightedMeasure) -> Self {
        let total = mu.total();
        Self {
            values: vec![1.0 / total; mu.len()],
        }
    }

    fn with_tolerance(values: Vec<f64>, mu: &WeightedMeasure, tol: f64) -> Result<Self, MarkovError> {
        check_positive(&values)?;
        let mass = mu.integrate(&values)?;
        if (mass - 1.0).abs() > tol {
            return Err(MarkovError::NotNormalized { mass });
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn log_values(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.ln()).collect()
    }
}

fn check_positive(values: &[f64]) -> Result<(), MarkovError> {
    match values.iter().position(|v| !(*v > 0.0) || !v.is_finite()) {
        Some(index) => Err(MarkovError::NonPositiveDensity {
            index,
            value: values[index],
        }),
        None => Ok(()),
    }
}

/// Strictly positive density on `M × M` with respect to `μ ⊗ μ`, stored
/// row-major (`values[i·n + j] = F(i, j)`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LiftedDensity {
    n: usize,
    values: Vec<f64>,
    symmetric: bool,
}

impl LiftedDensity {
    pub fn new(n: usize, values: Vec<f64>, mu: &WeightedMeasure) -> Result<Self, MarkovError> {
        if values.len() != n * n || mu.len() != n {
            return Err(KernelError::DimensionMismatch {
                expected: n * n,
                found: values.len(),
            }
            .into());
        }
        check_positive(&values)?;
        let mass = mu.product(mu).integrate(&values)?;
        if (mass - 1.0).abs() > MASS_TOLERANCE {
            return Err(MarkovError::NotNormalized { mass });
        }
        let symmetric = (0..n).all(|i| (0..i).all(|j| values[i * n + j] == values[j * n + i]));
        Ok(Self { n, values, symmetric })
    }

    /// Symmetrizes positive `values` by averaging with the transpose and
    /// rescales to unit mass.
    pub fn symmetrized(n: usize, values: Vec<f64>, mu: &WeightedMeasure) -> Result<Self, MarkovError> {
        if values.len() != n * n {
            return Err(KernelError::DimensionMismatch {
                expected: n * n,
                found: values.len(),
            }
            .into());
        }
        check_positive(&values)?;
        let mut sym = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                sym[i * n + j] = 0.5 * (values[i * n + j] + values[j * n + i]);
            }
        }
        let mass = mu.product(mu).integrate(&sym)?;
        sym.iter_mut().for_each(|v| *v /= mass);
        Self::new(n, sym, mu)
    }

    /// `f ⊗ f`.
    pub fn tensor_square(f: &DiscreteDensity) -> Self {
        Self::tensor(f, f)
    }

    /// `f ⊗ g`.
    pub fn tensor(f: &DiscreteDensity, g: &DiscreteDensity) -> Self {
        let n = f.len();
        let mut values = Vec::with_capacity(n * g.len());
        for a in f.values() {
            for b in g.values() {
                values.push(a * b);
            }
        }
        let symmetric = f.values() == g.values();
        Self { n, values, symmetric }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn transpose(&self) -> Self {
        let n = self.n;
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                values[j * n + i] = self.values[i * n + j];
            }
        }
        Self {
            n,
            values,
            symmetric: self.symmetric,
        }
    }

    fn as_density(&self) -> DiscreteDensity {
        DiscreteDensity {
            values: self.values.clone(),
        }
    }
}

/// `i_k(f) = Σ_x f(x) Ψ_Υ(log f)(x) μ(x)`.
pub fn fisher_nonlocal(chain: &ChainModel, f: &DiscreteDensity) -> Result<f64, MarkovError> {
    check_len(chain.n(), f.len())?;
    let psi = kernels::psi_upsilon(chain.kernel(), &f.log_values())?;
    let w = chain.mu().weights();
    Ok(f.values().iter().zip(&psi).zip(w).map(|((fv, p), m)| fv * p * m).sum())
}

/// `½ Σ_x Σ_y (f(y) - f(x)) (log f(y) - log f(x)) k(x,y) μ(x)`, valid on
/// reversible chains.
pub fn fisher_symmetric_form(chain: &ChainModel, f: &DiscreteDensity) -> Result<f64, MarkovError> {
    chain.require_reversible()?;
    check_len(chain.n(), f.len())?;
    let v = f.values();
    let lv = f.log_values();
    let w = chain.mu().weights();
    let mut acc = 0.0;
    for x in 0..chain.n() {
        for (y, r) in chain.kernel().row(x) {
            acc += (v[y] - v[x]) * (lv[y] - lv[x]) * r * w[x];
        }
    }
    Ok(0.5 * acc)
}

/// `h(f) = Σ_x f(x) log f(x) μ(x)`.
pub fn entropy(chain: &ChainModel, f: &DiscreteDensity) -> Result<f64, MarkovError> {
    check_len(chain.n(), f.len())?;
    let w = chain.mu().weights();
    Ok(f.values().iter().zip(w).map(|(v, m)| v * v.ln() * m).sum())
}

/// Transition matrix `P_t = exp(tQ)`.
pub fn transition_matrix(chain: &ChainModel, t: f64) -> Result<DMatrix<f64>, MarkovError> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(MarkovError::NegativeTime(t));
    }
    Ok(expm(&(chain.generator_matrix() * t)))
}

/// `P_t f = exp(tL) f`. The result must still have unit mass, which holds
/// whenever `μ` is invariant.
///
/// The flow is applied to `f - f(0)` and the constant added back, so that
/// constants are preserved exactly.
pub fn heat_flow(chain: &ChainModel, f: &DiscreteDensity, t: f64) -> Result<DiscreteDensity, MarkovError> {
    check_len(chain.n(), f.len())?;
    propagate(&transition_matrix(chain, t)?, f, chain.mu())
}

fn propagate(p: &DMatrix<f64>, f: &DiscreteDensity, mu: &WeightedMeasure) -> Result<DiscreteDensity, MarkovError> {
    let base = f.values().first().copied().unwrap_or(0.0);
    let centered = DVector::from_iterator(f.len(), f.values().iter().map(|v| v - base));
    let out = p * centered;
    DiscreteDensity::with_tolerance(out.iter().map(|v| v + base).collect(), mu, FLOW_MASS_TOLERANCE)
}

/// `|d/dt h(P_t f) + i_k(P_t f)|` with the derivative taken by the central
/// difference of step `dt`. For `t < dt` the backward point uses
/// `exp(-(dt - t)L)`, which is defined on a finite state space.
pub fn dissipation_residual(chain: &ChainModel, f: &DiscreteDensity, t: f64, dt: f64) -> Result<f64, MarkovError> {
    let (derivative, information) = dissipation_terms(chain, f, t, dt)?;
    Ok((derivative + information).abs())
}

/// The pair `(d/dt h(P_t f), i_k(P_t f))` used by [`dissipation_residual`].
pub fn dissipation_terms(
    chain: &ChainModel,
    f: &DiscreteDensity,
    t: f64,
    dt: f64,
) -> Result<(f64, f64), MarkovError> {
    chain.require_reversible()?;
    check_len(chain.n(), f.len())?;
    if !(t >= 0.0) || !t.is_finite() {
        return Err(MarkovError::NegativeTime(t));
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(MarkovError::InvalidStep(dt));
    }
    let q = chain.generator_matrix();
    let flow = |s: f64| -> Result<DiscreteDensity, MarkovError> { propagate(&expm(&(&q * s)), f, chain.mu()) };
    let forward = entropy(chain, &flow(t + dt)?)?;
    let backward = entropy(chain, &flow(t - dt)?)?;
    let derivative = (forward - backward) / (2.0 * dt);
    let information = fisher_nonlocal(chain, &flow(t)?)?;
    Ok((derivative, information))
}

/// Product chain `(k ⊕ k, μ ⊗ μ)`.
pub fn lift_chain(chain: &ChainModel) -> Result<ChainModel, MarkovError> {
    let kernel = kernels::tensorize(chain.kernel(), chain.kernel())?;
    let mu = chain.mu().product(chain.mu());
    ChainModel::new(kernel, mu, chain.reversible())
}

/// `(Π_μ F)(x) = Σ_y F(x, y) μ(y)`.
pub fn project(big_f: &LiftedDensity, mu: &WeightedMeasure) -> Result<DiscreteDensity, MarkovError> {
    if !big_f.is_symmetric() {
        return Err(MarkovError::NotSymmetric);
    }
    DiscreteDensity::new(first_marginal(big_f, mu)?, mu)
}

fn first_marginal(big_f: &LiftedDensity, mu: &WeightedMeasure) -> Result<Vec<f64>, MarkovError> {
    let n = big_f.n();
    check_len(n, mu.len())?;
    let w = mu.weights();
    Ok((0..n)
        .map(|x| (0..n).map(|y| big_f.get(x, y) * w[y]).sum())
        .collect())
}

fn second_marginal(big_f: &LiftedDensity, mu: &WeightedMeasure) -> Result<Vec<f64>, MarkovError> {
    let n = big_f.n();
    check_len(n, mu.len())?;
    let w = mu.weights();
    Ok((0..n)
        .map(|y| (0..n).map(|x| big_f.get(x, y) * w[x]).sum())
        .collect())
}

/// `|i_{k⊕k}(f ⊗ f) - 2 i_k(f)|`.
pub fn verify_lifting_identity(chain: &ChainModel, f: &DiscreteDensity) -> Result<f64, MarkovError> {
    let lifted = lift_chain(chain)?;
    let ff = LiftedDensity::tensor_square(f).as_density();
    Ok((fisher_nonlocal(&lifted, &ff)? - 2.0 * fisher_nonlocal(chain, f)?).abs())
}

/// `i_{k⊕k}(F) - 2 i_k(Π_μ F)` for symmetric `F`.
pub fn verify_lifting_inequality(chain: &ChainModel, big_f: &LiftedDensity) -> Result<f64, MarkovError> {
    let pf = project(big_f, chain.mu())?;
    let lifted = lift_chain(chain)?;
    Ok(fisher_nonlocal(&lifted, &big_f.as_density())? - 2.0 * fisher_nonlocal(chain, &pf)?)
}

/// `(|H(f ⊗ f) - 2 h(f)|, H(F) - 2 h(Π_μ F))`, with `H` the entropy on the
/// product space.
pub fn verify_entropy_lifting(
    chain: &ChainModel,
    f: &DiscreteDensity,
    big_f: &LiftedDensity,
) -> Result<(f64, f64), MarkovError> {
    let mu2 = chain.mu().product(chain.mu());
    let product_entropy = |g: &[f64]| -> f64 { g.iter().zip(mu2.weights()).map(|(v, m)| v * v.ln() * m).sum() };
    let ff = LiftedDensity::tensor_square(f);
    check_len(chain.n(), big_f.n())?;
    let residual = (product_entropy(ff.values()) - 2.0 * entropy(chain, f)?).abs();
    let pf = project(big_f, chain.mu())?;
    let slack = product_entropy(big_f.values()) - 2.0 * entropy(chain, &pf)?;
    Ok((residual, slack))
}

/// Squared covariance of the coordinates under `F μ⊗μ`:
/// `(ΣΣ c_x c_y F μμ - (Σ c_x Π¹F μ)(Σ c_y Π²F μ))²`. Coordinates default
/// to the state indices.
pub fn covariance_functional(
    big_f: &LiftedDensity,
    chain: &ChainModel,
    coords: Option<&[f64]>,
) -> Result<f64, MarkovError> {
    let n = big_f.n();
    check_len(chain.n(), n)?;
    let default: Vec<f64>;
    let c = match coords {
        Some(c) => {
            check_len(n, c.len())?;
            c
        }
        None => {
            default = (0..n).map(|i| i as f64).collect();
            &default
        }
    };
    let mu = chain.mu();
    let w = mu.weights();
    let mut joint = 0.0;
    for x in 0..n {
        for y in 0..n {
            joint += c[x] * c[y] * big_f.get(x, y) * w[x] * w[y];
        }
    }
    let p1 = first_marginal(big_f, mu)?;
    let p2 = second_marginal(big_f, mu)?;
    let m1: f64 = (0..n).map(|x| c[x] * p1[x] * w[x]).sum();
    let m2: f64 = (0..n).map(|y| c[y] * p2[y] * w[y]).sum();
    let cov = joint - m1 * m2;
    Ok(cov * cov)
}

fn check_len(expected: usize, found: usize) -> Result<(), MarkovError> {
    if expected == found {
        Ok(())
    } else {
        Err(KernelError::DimensionMismatch { expected, found }.into())
    }
}

/// Index helper for the lifted state space of an `n`-state chain.
pub fn lifted_index(n: usize) -> ProductIndex {
    ProductIndex::new(n, n)
}
