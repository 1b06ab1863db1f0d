//! Finite jump kernels and the operators they induce.
//!
//! A [`FiniteKernel`] holds the rates `k(x, {y})` of a continuous-time jump
//! process on `{0, .., n-1}`. It defines the generator
//!
//! ```text
//! L f(x)   = Σ_y (f(y) - f(x)) k(x, y)
//! Ψ_Υ g(x) = Σ_y Υ(g(y) - g(x)) k(x, y),   Υ(r) = e^r - 1 - r
//! ```
//!
//! and tensorizes as `k₁ ⊕ k₂`, in which exactly one coordinate jumps at a
//! time.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest argument accepted by [`checked_upsilon`].
pub const UPSILON_MAX_ARG: f64 = 700.0;

/// Kernels on at most this many states are stored densely.
pub const DENSE_LIMIT: usize = 64;

/// Default bound on the state count produced by [`tensorize`].
pub const DEFAULT_TENSOR_LIMIT: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("rate k({i}, {j}) = {value} is negative or not finite")]
    InvalidRate { i: usize, j: usize, value: f64 },
    #[error("diagonal rate k({i}, {i}) = {value} is not zero")]
    NonzeroDiagonal { i: usize, value: f64 },
    #[error("measure weight {value} at state {i} is not strictly positive")]
    NonPositiveWeight { i: usize, value: f64 },
    #[error("input {value} at index {index} is not strictly positive")]
    NonPositiveInput { index: usize, value: f64 },
    #[error("input {value} at index {index} is not finite")]
    NonFiniteInput { index: usize, value: f64 },
    #[error("Υ argument {arg} exceeds {UPSILON_MAX_ARG}")]
    Overflow { arg: f64 },
    #[error("product of {n} and {m} states exceeds the limit {limit}")]
    SizeOverflow { n: usize, m: usize, limit: usize },
    #[error("state {state} out of range for {n} states")]
    StateOutOfRange { state: usize, n: usize },
}

/// `Υ(r) = e^r - 1 - r`, accurate for small `|r|`.
pub fn upsilon(r: f64) -> f64 {
    if r.abs() < 0.1 {
        // Horner form of Σ_{k=2}^{10} r^k / k!
        let mut acc = 1.0 / 3_628_800.0;
        for k in (2..10).rev() {
            acc = acc * r + 1.0 / factorial(k);
        }
        acc * r * r
    } else {
        r.exp_m1() - r
    }
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

/// [`upsilon`] with the overflow guard `r ≤ UPSILON_MAX_ARG`.
pub fn checked_upsilon(r: f64) -> Result<f64, KernelError> {
    if r > UPSILON_MAX_ARG {
        Err(KernelError::Overflow { arg: r })
    } else {
        Ok(upsilon(r))
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Storage {
    Dense(Vec<f64>),
    Sparse {
        row_start: Vec<usize>,
        cols: Vec<usize>,
        vals: Vec<f64>,
    },
}

/// Nonnegative jump rates with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteKernel {
    n: usize,
    storage: Storage,
}

impl FiniteKernel {
    /// Kernel from a square matrix of rates.
    pub fn new(rates: Vec<Vec<f64>>) -> Result<Self, KernelError> {
        let n = rates.len();
        let mut triplets = Vec::new();
        for (i, row) in rates.iter().enumerate() {
            if row.len() != n {
                return Err(KernelError::DimensionMismatch {
                    expected: n,
                    found: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if i == j {
                    if v != 0.0 {
                        return Err(KernelError::NonzeroDiagonal { i, value: v });
                    }
                } else if v != 0.0 || v.is_nan() {
                    triplets.push((i, j, v));
                }
            }
        }
        Self::from_triplets(n, triplets)
    }

    /// Kernel from `(from, to, rate)` entries. Repeated entries add up.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Result<Self, KernelError> {
        for &(i, j, v) in &triplets {
            for s in [i, j] {
                if s >= n {
                    return Err(KernelError::StateOutOfRange { state: s, n });
                }
            }
            if !(v >= 0.0) || !v.is_finite() {
                return Err(KernelError::InvalidRate { i, j, value: v });
            }
            if i == j && v != 0.0 {
                return Err(KernelError::NonzeroDiagonal { i, value: v });
            }
        }
        triplets.retain(|&(i, j, v)| i != j && v != 0.0);
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));

        if n <= DENSE_LIMIT {
            let mut dense = vec![0.0; n * n];
            for (i, j, v) in triplets {
                dense[i * n + j] += v;
            }
            return Ok(Self {
                n,
                storage: Storage::Dense(dense),
            });
        }

        let mut row_start = vec![0usize; n + 1];
        let mut cols: Vec<usize> = Vec::with_capacity(triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            if last == Some((i, j)) {
                *vals.last_mut().unwrap() += v;
                continue;
            }
            cols.push(j);
            vals.push(v);
            row_start[i + 1] += 1;
            last = Some((i, j));
        }
        for i in 0..n {
            row_start[i + 1] += row_start[i];
        }
        Ok(Self {
            n,
            storage: Storage::Sparse { row_start, cols, vals },
        })
    }

    pub fn zero(n: usize) -> Self {
        Self::from_triplets(n, Vec::new()).expect("empty kernel is valid")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.storage, Storage::Sparse { .. })
    }

    pub fn rate(&self, i: usize, j: usize) -> f64 {
        match &self.storage {
            Storage::Dense(d) => d[i * self.n + j],
            Storage::Sparse { row_start, cols, vals } => {
                let range = row_start[i]..row_start[i + 1];
                match cols[range.clone()].binary_search(&j) {
                    Ok(p) => vals[range.start + p],
                    Err(_) => 0.0,
                }
            }
        }
    }

    /// Nonzero off-diagonal entries `(y, k(x, y))` of row `x`, by increasing `y`.
    pub fn row(&self, x: usize) -> Box<dyn Iterator<Item = (usize, f64)> + '_> {
        match &self.storage {
            Storage::Dense(d) => Box::new(
                d[x * self.n..(x + 1) * self.n]
                    .iter()
                    .copied()
                    .enumerate()
                    .filter(|&(_, v)| v != 0.0),
            ),
            Storage::Sparse { row_start, cols, vals } => {
                let r = row_start[x]..row_start[x + 1];
                Box::new(cols[r.clone()].iter().copied().zip(vals[r].iter().copied()))
            }
        }
    }

    /// Number of nonzero rates.
    pub fn nnz(&self) -> usize {
        (0..self.n).map(|x| self.row(x).count()).sum()
    }

    /// Total jump rate out of `x`.
    pub fn exit_rate(&self, x: usize) -> f64 {
        self.row(x).map(|(_, v)| v).sum()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.n]; self.n];
        for (x, row) in out.iter_mut().enumerate() {
            for (y, v) in self.row(x) {
                row[y] = v;
            }
        }
        out
    }

    /// Largest violation of detailed balance `μ(x) k(x,y) = μ(y) k(y,x)`,
    /// relative to the larger side.
    pub fn detailed_balance_defect(&self, mu: &WeightedMeasure) -> Result<f64, KernelError> {
        check_len(self.n, mu.len())?;
        let w = mu.weights();
        let mut worst = 0.0f64;
        for x in 0..self.n {
            for (y, v) in self.row(x) {
                let a = w[x] * v;
                let b = w[y] * self.rate(y, x);
                worst = worst.max((a - b).abs() / a.max(b));
            }
        }
        Ok(worst)
    }
}

/// Strictly positive weights `μ({x})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct WeightedMeasure {
    weights: Vec<f64>,
}

impl WeightedMeasure {
    pub fn new(weights: Vec<f64>) -> Result<Self, KernelError> {
        for (i, &w) in weights.iter().enumerate() {
            if !(w > 0.0) || !w.is_finite() {
                return Err(KernelError::NonPositiveWeight { i, value: w });
            }
        }
        Ok(Self { weights })
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            weights: vec![1.0 / n as f64; n],
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `Σ_x f(x) μ(x)`.
    pub fn integrate(&self, f: &[f64]) -> Result<f64, KernelError> {
        check_len(self.len(), f.len())?;
        Ok(f.iter().zip(&self.weights).map(|(a, b)| a * b).sum())
    }

    /// Product measure on `n·m` states, indexed by [`ProductIndex`].
    pub fn product(&self, other: &WeightedMeasure) -> WeightedMeasure {
        let mut weights = Vec::with_capacity(self.len() * other.len());
        for a in &self.weights {
            for b in &other.weights {
                weights.push(a * b);
            }
        }
        WeightedMeasure { weights }
    }
}

impl TryFrom<Vec<f64>> for WeightedMeasure {
    type Error = KernelError;
    fn try_from(v: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<WeightedMeasure> for Vec<f64> {
    fn from(m: WeightedMeasure) -> Self {
        m.weights
    }
}

/// Row-major flattening of `{0..n} × {0..m}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProductIndex {
    pub n: usize,
    pub m: usize,
}

impl ProductIndex {
    pub fn new(n: usize, m: usize) -> Self {
        Self { n, m }
    }

    pub fn len(&self) -> usize {
        self.n * self.m
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn encode(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.n && j < self.m);
        i * self.m + j
    }

    pub fn decode(&self, k: usize) -> (usize, usize) {
        (k / self.m, k % self.m)
    }
}

fn check_len(expected: usize, found: usize) -> Result<(), KernelError> {
    if expected == found {
        Ok(())
    } else {
        Err(KernelError::DimensionMismatch { expected, found })
    }
}

fn check_finite(v: &[f64]) -> Result<(), KernelError> {
    match v.iter().position(|x| !x.is_finite()) {
        Some(index) => Err(KernelError::NonFiniteInput { index, value: v[index] }),
        None => Ok(()),
    }
}

/// `L f`.
pub fn generator_apply(k: &FiniteKernel, f: &[f64]) -> Result<Vec<f64>, KernelError> {
    check_len(k.n(), f.len())?;
    check_finite(f)?;
    Ok((0..k.n())
        .map(|x| k.row(x).map(|(y, r)| (f[y] - f[x]) * r).sum())
        .collect())
}

/// `Ψ_Υ(g)(x)` at a single state.
pub fn psi_upsilon_at(k: &FiniteKernel, g: &[f64], x: usize) -> Result<f64, KernelError> {
    check_len(k.n(), g.len())?;
    if x >= k.n() {
        return Err(KernelError::StateOutOfRange { state: x, n: k.n() });
    }
    let mut acc = 0.0;
    for (y, r) in k.row(x) {
        acc += checked_upsilon(g[y] - g[x])? * r;
    }
    Ok(acc)
}

/// `Ψ_Υ(g)`.
pub fn psi_upsilon(k: &FiniteKernel, g: &[f64]) -> Result<Vec<f64>, KernelError> {
    check_len(k.n(), g.len())?;
    check_finite(g)?;
    (0..k.n()).map(|x| psi_upsilon_at(k, g, x)).collect()
}

/// `k₁ ⊕ k₂` on `n·m` states, indexed by [`ProductIndex`].
pub fn tensorize(k1: &FiniteKernel, k2: &FiniteKernel) -> Result<FiniteKernel, KernelError> {
    tensorize_with_limit(k1, k2, DEFAULT_TENSOR_LIMIT)
}

pub fn tensorize_with_limit(k1: &FiniteKernel, k2: &FiniteKernel, limit: usize) -> Result<FiniteKernel, KernelError> {
    let (n, m) = (k1.n(), k2.n());
    let size = n.checked_mul(m).filter(|&s| s <= limit);
    let Some(size) = size else {
        return Err(KernelError::SizeOverflow { n, m, limit });
    };
    let idx = ProductIndex::new(n, m);
    let mut triplets = Vec::with_capacity(k1.nnz() * m + k2.nnz() * n);
    for i in 0..n {
        for j in 0..m {
            let from = idx.encode(i, j);
            for (i2, r) in k1.row(i) {
                triplets.push((from, idx.encode(i2, j), r));
            }
            for (j2, r) in k2.row(j) {
                triplets.push((from, idx.encode(i, j2), r));
            }
        }
    }
    FiniteKernel::from_triplets(size, triplets)
}

/// Residuals of the sum formulas for `L` and `Ψ_Υ` of `k₁ ⊕ k₂` at `(i, j)`.
///
/// The left-hand sides use the tensorized kernel; the right-hand sides use
/// the sections `f^y = f(·, y)` and `f_x = f(x, ·)` under `k₁` and `k₂`.
pub fn verify_sum_formula(
    k1: &FiniteKernel,
    k2: &FiniteKernel,
    f: &[f64],
    point: (usize, usize),
) -> Result<(f64, f64), KernelError> {
    let (n, m) = (k1.n(), k2.n());
    let idx = ProductIndex::new(n, m);
    check_len(idx.len(), f.len())?;
    check_finite(f)?;
    let (i, j) = point;
    if i >= n {
        return Err(KernelError::StateOutOfRange { state: i, n });
    }
    if j >= m {
        return Err(KernelError::StateOutOfRange { state: j, n: m });
    }
    let k = tensorize(k1, k2)?;
    let at = idx.encode(i, j);

    let lhs_l = generator_apply(&k, f)?[at];
    let lhs_psi = psi_upsilon_at(&k, f, at)?;

    let column: Vec<f64> = (0..n).map(|a| f[idx.encode(a, j)]).collect();
    let row: Vec<f64> = (0..m).map(|b| f[idx.encode(i, b)]).collect();
    let rhs_l = generator_apply(k1, &column)?[i] + generator_apply(k2, &row)?[j];
    let rhs_psi = psi_upsilon_at(k1, &column, i)? + psi_upsilon_at(k2, &row, j)?;

    Ok(((lhs_l - rhs_l).abs(), (lhs_psi - rhs_psi).abs()))
}

/// Slack of the key inequality at `x`:
///
/// ```text
/// Σ_y Ψ_Υ(log H(·,y))(x) H(x,y) f(y) ν_y  -  Ψ_Υ(log Pf)(x) Pf(x),
/// Pf(x) = Σ_y H(x,y) f(y) ν_y.
/// ```
///
/// `h` is `n × m` with rows indexed by the states of `k`.
pub fn key_inequality_slack(
    k: &FiniteKernel,
    h: &[Vec<f64>],
    f: &[f64],
    nu: &WeightedMeasure,
    x: usize,
) -> Result<f64, KernelError> {
    let n = k.n();
    let m = f.len();
    check_len(n, h.len())?;
    check_len(m, nu.len())?;
    if x >= n {
        return Err(KernelError::StateOutOfRange { state: x, n });
    }
    for row in h {
        check_len(m, row.len())?;
    }
    for (index, &v) in h.iter().flatten().chain(f.iter()).enumerate() {
        if !(v > 0.0) || !v.is_finite() {
            return Err(KernelError::NonPositiveInput { index, value: v });
        }
    }
    let w = nu.weights();

    let mut lhs = 0.0;
    for y in 0..m {
        let log_col: Vec<f64> = h.iter().map(|row| row[y].ln()).collect();
        lhs += psi_upsilon_at(k, &log_col, x)? * h[x][y] * f[y] * w[y];
    }
    let pf: Vec<f64> = h
        .iter()
        .map(|row| (0..m).map(|y| row[y] * f[y] * w[y]).sum())
        .collect();
    let log_pf: Vec<f64> = pf.iter().map(|v: &f64| v.ln()).collect();
    let rhs = psi_upsilon_at(k, &log_pf, x)? * pf[x];
    Ok(lhs - rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn two_state(a: f64, b: f64) -> FiniteKernel {
        FiniteKernel::new(vec![vec![0.0, a], vec![b, 0.0]]).unwrap()
    }

    #[test]
    fn upsilon_matches_definition() {
        for r in [-3.0f64, -0.5, -0.1, 0.1, 1.0, 5.0] {
            let direct = r.exp() - 1.0 - r;
            assert!((upsilon(r) - direct).abs() <= 1e-14 * direct.abs().max(1.0));
        }
        assert_eq!(upsilon(0.0), 0.0);
        let r = 1e-6;
        assert!((upsilon(r) - (r * r / 2.0 + r * r * r / 6.0 + r.powi(4) / 24.0)).abs() < 1e-15 * r * r);
        assert!((upsilon(0.0999) - (0.0999f64.exp_m1() - 0.0999)).abs() < 1e-17);
    }

    #[test]
    fn upsilon_overflow_guard() {
        assert!(matches!(checked_upsilon(701.0), Err(KernelError::Overflow { .. })));
        assert!(checked_upsilon(699.0).unwrap().is_finite());
        assert!(checked_upsilon(-1e6).unwrap().is_finite());
    }

    #[test]
    fn rejects_bad_rates() {
        assert!(matches!(
            FiniteKernel::new(vec![vec![1.0, 0.0], vec![0.0, 0.0]]),
            Err(KernelError::NonzeroDiagonal { .. })
        ));
        assert!(matches!(
            FiniteKernel::new(vec![vec![0.0, -1.0], vec![0.0, 0.0]]),
            Err(KernelError::InvalidRate { .. })
        ));
        assert!(matches!(
            FiniteKernel::new(vec![vec![0.0, 1.0], vec![0.0]]),
            Err(KernelError::DimensionMismatch { .. })
        ));
        assert!(WeightedMeasure::new(vec![1.0, 0.0]).is_err());
    }

    #[test]
    fn generator_examples() {
        let k = two_state(1.0, 1.0);
        assert_eq!(generator_apply(&k, &[0.7, 0.7]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(generator_apply(&k, &[0.0, 1.0]).unwrap(), vec![1.0, -1.0]);
        let cycle = FiniteKernel::from_triplets(3, vec![(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)]).unwrap();
        assert_eq!(generator_apply(&cycle, &[1.0, 0.0, 0.0]).unwrap(), vec![-1.0, 0.0, 1.0]);
        assert!(matches!(
            generator_apply(&k, &[1.0]),
            Err(KernelError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn psi_examples() {
        let k = two_state(1.0, 1.0);
        assert_eq!(psi_upsilon(&k, &[3.0, 3.0]).unwrap(), vec![0.0, 0.0]);
        let v = psi_upsilon(&k, &[0.0, 1.0]).unwrap();
        assert!((v[0] - (E - 2.0)).abs() < 1e-15);
        assert!((v[1] - 1.0 / E).abs() < 1e-15);
        let k = two_state(2.0, 3.0);
        let v = psi_upsilon(&k, &[0.0, 1.0]).unwrap();
        assert!((v[0] - 2.0 * (E - 2.0)).abs() < 1e-14);
        assert!((v[1] - 3.0 / E).abs() < 1e-14);
        assert!(matches!(
            psi_upsilon(&k, &[0.0, 800.0]),
            Err(KernelError::Overflow { .. })
        ));
    }

    #[test]
    fn tensorized_two_state() {
        let k = two_state(1.0, 1.0);
        let t = tensorize(&k, &k).unwrap();
        assert_eq!(t.n(), 4);
        let idx = ProductIndex::new(2, 2);
        for s in 0..4 {
            let row: Vec<_> = t.row(s).collect();
            assert_eq!(row.len(), 2);
            assert!(row.iter().all(|&(_, r)| r == 1.0));
            let (i, j) = idx.decode(s);
            for (target, _) in row {
                let (i2, j2) = idx.decode(target);
                assert!((i2 != i) ^ (j2 != j));
            }
        }
        assert_eq!(t.rate(idx.encode(0, 0), idx.encode(1, 1)), 0.0);
    }

    #[test]
    fn tensorize_with_zero_kernel_is_block_diagonal() {
        let k = FiniteKernel::new(vec![vec![0.0, 2.0, 0.5], vec![1.0, 0.0, 0.0], vec![0.0, 3.0, 0.0]]).unwrap();
        let z = FiniteKernel::zero(2);
        let t = tensorize(&k, &z).unwrap();
        let idx = ProductIndex::new(3, 2);
        for a in 0..3 {
            for b in 0..2 {
                for a2 in 0..3 {
                    for b2 in 0..2 {
                        let expected = if b == b2 { k.rate(a, a2) } else { 0.0 };
                        assert_eq!(t.rate(idx.encode(a, b), idx.encode(a2, b2)), expected);
                    }
                }
            }
        }
    }

    #[test]
    fn tensorize_size_guard() {
        let k = FiniteKernel::zero(10);
        assert!(matches!(
            tensorize_with_limit(&k, &k, 99),
            Err(KernelError::SizeOverflow { .. })
        ));
        assert!(tensorize_with_limit(&k, &k, 100).is_ok());
    }

    #[test]
    fn sparse_storage_matches_dense() {
        let n = 70;
        let triplets: Vec<_> = (0..n).map(|i| (i, (i + 1) % n, 1.0 + i as f64)).collect();
        let k = FiniteKernel::from_triplets(n, triplets.clone()).unwrap();
        assert!(k.is_sparse());
        assert_eq!(k.nnz(), n);
        assert_eq!(k.rate(5, 6), 6.0);
        assert_eq!(k.rate(6, 5), 0.0);
        let f: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let lf = generator_apply(&k, &f).unwrap();
        for x in 0..n {
            let y = (x + 1) % n;
            assert!((lf[x] - (f[y] - f[x]) * (1.0 + x as f64)).abs() < 1e-14);
        }
    }

    #[test]
    fn duplicate_triplets_add() {
        let k = FiniteKernel::from_triplets(2, vec![(0, 1, 1.0), (0, 1, 2.0)]).unwrap();
        assert_eq!(k.rate(0, 1), 3.0);
        let big = FiniteKernel::from_triplets(100, vec![(0, 1, 1.0), (0, 1, 2.0)]).unwrap();
        assert_eq!(big.rate(0, 1), 3.0);
        assert_eq!(big.nnz(), 1);
    }

    #[test]
    fn product_index_round_trip() {
        let idx = ProductIndex::new(3, 5);
        for i in 0..3 {
            for j in 0..5 {
                assert_eq!(idx.decode(idx.encode(i, j)), (i, j));
            }
        }
    }

    #[test]
    fn sum_formula_on_product_function() {
        let k1 = two_state(1.5, 0.5);
        let k2 = two_state(2.0, 1.0);
        let g = [1.0, 2.0];
        let idx = ProductIndex::new(2, 2);
        let mut f = vec![0.0; 4];
        for i in 0..2 {
            for j in 0..2 {
                f[idx.encode(i, j)] = g[i] * g[j];
            }
        }
        for i in 0..2 {
            for j in 0..2 {
                let (rl, rp) = verify_sum_formula(&k1, &k2, &f, (i, j)).unwrap();
                assert!(rl <= 1e-12 && rp <= 1e-12);
            }
        }
        // g ⊕ g as exponent: Ψ(g(i) + g(j)) splits into one-coordinate terms.
        let mut sum = vec![0.0; 4];
        for i in 0..2 {
            for j in 0..2 {
                sum[idx.encode(i, j)] = g[i] + g[j];
            }
        }
        let t = tensorize(&k1, &k2).unwrap();
        let psi = psi_upsilon(&t, &sum).unwrap();
        let p1 = psi_upsilon(&k1, &g).unwrap();
        let p2 = psi_upsilon(&k2, &g).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((psi[idx.encode(i, j)] - (p1[i] + p2[j])).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn key_inequality_trivial_cases() {
        let k = FiniteKernel::new(vec![vec![0.0, 1.0, 2.0], vec![0.5, 0.0, 1.0], vec![1.0, 1.0, 0.0]]).unwrap();
        let nu = WeightedMeasure::new(vec![0.2, 0.3, 0.5]).unwrap();
        let hx = [1.0, 2.5, 0.4];
        let h: Vec<Vec<f64>> = hx.iter().map(|&v| vec![v; 3]).collect();
        let f = [0.3, 1.2, 2.0];
        for x in 0..3 {
            assert!(key_inequality_slack(&k, &h, &f, &nu, x).unwrap().abs() < 1e-12);
        }
        let h1: Vec<Vec<f64>> = hx.iter().map(|&v| vec![v]).collect();
        let nu1 = WeightedMeasure::new(vec![0.7]).unwrap();
        for x in 0..3 {
            assert!(key_inequality_slack(&k, &h1, &[1.3], &nu1, x).unwrap().abs() < 1e-12);
        }
        assert!(matches!(
            key_inequality_slack(&k, &h, &[0.0, 1.0, 1.0], &nu, 0),
            Err(KernelError::NonPositiveInput { .. })
        ));
    }

    #[test]
    fn detailed_balance_defect_detects_irreversibility() {
        let mu = WeightedMeasure::new(vec![1.0, 2.0]).unwrap();
        assert!(two_state(2.0, 1.0).detailed_balance_defect(&mu).unwrap() < 1e-15);
        assert!(two_state(1.0, 1.0).detailed_balance_defect(&mu).unwrap() > 0.1);
    }
}
