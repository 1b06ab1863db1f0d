//! Seeded random instances for the randomized verification suites.
//!
//! Trial `i` of a suite with root seed `r` draws from a ChaCha8 stream
//! selected by `i`, so results do not depend on how trials are scheduled.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{ChainModel, DiscreteDensity, LiftedDensity};
use crate::kernels::{FiniteKernel, WeightedMeasure};

/// Probability that an off-diagonal edge weight is zero.
const ZERO_EDGE_PROBABILITY: f64 = 0.2;

pub fn trial_rng(root_seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(root_seed);
    rng.set_stream(trial);
    rng
}

fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    rng.gen_range(lo.ln()..hi.ln()).exp()
}

pub fn random_measure<R: Rng>(rng: &mut R, n: usize) -> WeightedMeasure {
    WeightedMeasure::new((0..n).map(|_| log_uniform(rng, 0.5, 2.0)).collect()).expect("positive weights")
}

/// Irreducible reversible chain: symmetric edge weights `w(x,y)` and
/// `k(x,y) = w(x,y) / μ(x)`. The path `0 - 1 - .. - n-1` is always present;
/// other edges are dropped at random.
pub fn random_reversible_chain<R: Rng>(rng: &mut R, n: usize) -> ChainModel {
    let mu = random_measure(rng, n);
    let mut triplets = Vec::new();
    for x in 0..n {
        for y in (x + 1)..n {
            if y != x + 1 && rng.gen_bool(ZERO_EDGE_PROBABILITY) {
                continue;
            }
            let w = log_uniform(rng, 0.05, 1.0);
            triplets.push((x, y, w / mu.weights()[x]));
            triplets.push((y, x, w / mu.weights()[y]));
        }
    }
    let kernel = FiniteKernel::from_triplets(n, triplets).expect("valid rates");
    ChainModel::new(kernel, mu, true).expect("detailed balance holds by construction")
}

/// Kernel with independent rates, generally not reversible.
pub fn random_kernel<R: Rng>(rng: &mut R, n: usize) -> FiniteKernel {
    let mut triplets = Vec::new();
    for x in 0..n {
        for y in 0..n {
            if x != y && !rng.gen_bool(ZERO_EDGE_PROBABILITY) {
                triplets.push((x, y, log_uniform(rng, 0.05, 3.0)));
            }
        }
    }
    FiniteKernel::from_triplets(n, triplets).expect("valid rates")
}

pub fn random_positive_vector<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| log_uniform(rng, 0.25, 4.0)).collect()
}

pub fn random_density<R: Rng>(rng: &mut R, mu: &WeightedMeasure) -> DiscreteDensity {
    DiscreteDensity::normalized(random_positive_vector(rng, mu.len()), mu).expect("positive values")
}

/// I.i.d. positive entries, averaged with the transpose and renormalized
/// against `μ ⊗ μ`.
pub fn random_symmetric_lifted<R: Rng>(rng: &mut R, mu: &WeightedMeasure) -> LiftedDensity {
    let n = mu.len();
    LiftedDensity::symmetrized(n, random_positive_vector(rng, n * n), mu).expect("positive values")
}

pub fn random_positive_matrix<R: Rng>(rng: &mut R, n: usize, m: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| random_positive_vector(rng, m)).collect()
}
