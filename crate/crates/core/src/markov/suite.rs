//! Randomized verification suites over finite chains.
//!
//! Trials run in parallel; every reduction happens afterwards in trial
//! order, so the reports depend only on the seed and trial count.

use rand::Rng;
use rayon::prelude::*;

use super::sample::{
    random_density, random_kernel, random_measure, random_positive_matrix, random_positive_vector,
    random_reversible_chain, random_symmetric_lifted, trial_rng,
};
use super::{
    dissipation_residual, fisher_nonlocal, fisher_symmetric_form, verify_entropy_lifting, verify_lifting_identity,
    verify_lifting_inequality, ChainModel, LiftedDensity, MarkovError,
};
use crate::kernels::{key_inequality_slack, WeightedMeasure};
use crate::params;
use crate::report::VerificationReport;

pub const IDENTITY_TOLERANCE: f64 = 1e-10;
pub const ENTROPY_IDENTITY_TOLERANCE: f64 = 1e-12;
pub const SLACK_TOLERANCE: f64 = 1e-10;
pub const SYMMETRIC_FORM_TOLERANCE: f64 = 1e-12;
pub const DISSIPATION_TOLERANCE: f64 = 1e-6;
pub const DISSIPATION_STEP: f64 = 1e-4;
/// Coarse step of the convergence-order check; the fine step is half of it.
pub const RATIO_STEP: f64 = 2e-3;
/// Accepted band for `residual(dt) / residual(dt/2)` around 4.
pub const RATIO_BAND: (f64, f64) = (3.2, 4.8);

/// Where the chains of a suite come from.
#[derive(Debug, Clone)]
pub enum ChainSource {
    /// Fresh random reversible chains with state counts in `min_n..=max_n`.
    Random { min_n: usize, max_n: usize },
    /// Trial `i` uses `chains[i % len]`.
    Fixed(Vec<ChainModel>),
}

impl ChainSource {
    fn chain<R: Rng>(&self, rng: &mut R, trial: usize) -> ChainModel {
        match self {
            ChainSource::Random { min_n, max_n } => {
                let n = rng.gen_range(*min_n..=*max_n);
                random_reversible_chain(rng, n)
            }
            ChainSource::Fixed(chains) => chains[trial % chains.len()].clone(),
        }
    }

    fn describe(&self) -> String {
        match self {
            ChainSource::Random { min_n, max_n } => format!("random reversible, n in [{min_n}, {max_n}]"),
            ChainSource::Fixed(chains) => format!("{} fixed chain(s)", chains.len()),
        }
    }
}

fn run_trials<T, F>(seed: u64, trials: usize, body: F) -> Result<Vec<T>, MarkovError>
where
    T: Send,
    F: Fn(&mut rand_chacha::ChaCha8Rng, usize) -> Result<T, MarkovError> + Sync,
{
    (0..trials)
        .into_par_iter()
        .map(|i| body(&mut trial_rng(seed, i as u64), i))
        .collect()
}

fn max_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, f64::max)
}

fn min_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(f64::INFINITY, f64::min)
}

/// `|i_{k⊕k}(f⊗f) - 2 i_k(f)|` over random densities.
pub fn lifting_identity(source: &ChainSource, seed: u64, trials: usize) -> Result<VerificationReport, MarkovError> {
    let residuals = run_trials(seed, trials, |rng, i| {
        let chain = source.chain(rng, i);
        let f = random_density(rng, chain.mu());
        verify_lifting_identity(&chain, &f)
    })?;
    let worst = max_of(residuals);
    Ok(VerificationReport::residual(
        "markov.lifting_identity",
        params! {"seed" => seed, "trials" => trials, "chains" => source.describe()},
        worst,
        Some(0.0),
        worst,
        IDENTITY_TOLERANCE,
    ))
}

/// `i_{k⊕k}(F) - 2 i_k(Π_μ F)` over random symmetric `F`, plus the equality
/// case `F = f ⊗ f`.
pub fn lifting_inequality(source: &ChainSource, seed: u64, trials: usize) -> Result<Vec<VerificationReport>, MarkovError> {
    let pairs = run_trials(seed, trials, |rng, i| {
        let chain = source.chain(rng, i);
        let big_f = random_symmetric_lifted(rng, chain.mu());
        let f = random_density(rng, chain.mu());
        let slack = verify_lifting_inequality(&chain, &big_f)?;
        let equality = verify_lifting_inequality(&chain, &LiftedDensity::tensor_square(&f))?;
        Ok((slack, equality.abs()))
    })?;
    let min_slack = min_of(pairs.iter().map(|p| p.0));
    let worst_equality = max_of(pairs.iter().map(|p| p.1));
    let p = params! {"seed" => seed, "trials" => trials, "chains" => source.describe()};
    Ok(vec![
        VerificationReport::slack("markov.lifting_inequality", p.clone(), min_slack, None, min_slack, SLACK_TOLERANCE),
        VerificationReport::residual(
            "markov.lifting_inequality_product_equality",
            p,
            worst_equality,
            Some(0.0),
            worst_equality,
            IDENTITY_TOLERANCE,
        ),
    ])
}

/// Entropy lifting: `|H(f⊗f) - 2h(f)|` and `H(F) - 2h(Π_μ F)`.
pub fn entropy_lifting(source: &ChainSource, seed: u64, trials: usize) -> Result<Vec<VerificationReport>, MarkovError> {
    let pairs = run_trials(seed, trials, |rng, i| {
        let chain = source.chain(rng, i);
        let big_f = random_symmetric_lifted(rng, chain.mu());
        let f = random_density(rng, chain.mu());
        verify_entropy_lifting(&chain, &f, &big_f)
    })?;
    let worst_identity = max_of(pairs.iter().map(|p| p.0));
    let min_slack = min_of(pairs.iter().map(|p| p.1));
    let p = params! {"seed" => seed, "trials" => trials, "chains" => source.describe()};
    Ok(vec![
        VerificationReport::residual(
            "markov.entropy_lifting_identity",
            p.clone(),
            worst_identity,
            Some(0.0),
            worst_identity,
            ENTROPY_IDENTITY_TOLERANCE,
        ),
        VerificationReport::slack("markov.entropy_lifting_inequality", p, min_slack, None, min_slack, SLACK_TOLERANCE),
    ])
}

/// `i_k` against its symmetric double-sum form on reversible chains.
pub fn symmetric_form(source: &ChainSource, seed: u64, trials: usize) -> Result<VerificationReport, MarkovError> {
    let diffs = run_trials(seed, trials, |rng, i| {
        let chain = source.chain(rng, i);
        let f = random_density(rng, chain.mu());
        Ok((fisher_nonlocal(&chain, &f)? - fisher_symmetric_form(&chain, &f)?).abs())
    })?;
    let worst = max_of(diffs);
    Ok(VerificationReport::residual(
        "markov.symmetric_form",
        params! {"seed" => seed, "trials" => trials, "chains" => source.describe()},
        worst,
        Some(0.0),
        worst,
        SYMMETRIC_FORM_TOLERANCE,
    ))
}

/// Minimum slack of the key inequality over random kernels, kernels
/// `H > 0`, densities and all states.
pub fn key_inequality(seed: u64, trials: usize) -> Result<VerificationReport, MarkovError> {
    let slacks = run_trials(seed, trials, |rng, _| {
        let n = rng.gen_range(2..=5);
        let m = rng.gen_range(1..=5);
        let k = random_kernel(rng, n);
        let h = random_positive_matrix(rng, n, m);
        let f = random_positive_vector(rng, m);
        let nu: WeightedMeasure = random_measure(rng, m);
        let mut worst = f64::INFINITY;
        for x in 0..n {
            worst = worst.min(key_inequality_slack(&k, &h, &f, &nu, x)?);
        }
        Ok(worst)
    })?;
    let worst = min_of(slacks);
    Ok(VerificationReport::slack(
        "kernels.key_inequality",
        params! {"seed" => seed, "trials" => trials},
        worst,
        None,
        worst,
        SLACK_TOLERANCE,
    ))
}

/// Entropy dissipation residuals at the given times, and the ratio of
/// residuals under halving of `ratio_dt`.
pub fn dissipation(
    source: &ChainSource,
    seed: u64,
    trials: usize,
    times: &[f64],
    dt: f64,
    ratio_dt: f64,
) -> Result<Vec<VerificationReport>, MarkovError> {
    let rows = run_trials(seed, trials, |rng, i| {
        let chain = source.chain(rng, i);
        let f = random_density(rng, chain.mu());
        let mut worst = 0.0f64;
        let mut ratios = Vec::with_capacity(times.len());
        for &t in times {
            worst = worst.max(dissipation_residual(&chain, &f, t, dt)?);
            let coarse = dissipation_residual(&chain, &f, t, ratio_dt)?;
            let fine = dissipation_residual(&chain, &f, t, 0.5 * ratio_dt)?;
            ratios.push(coarse / fine);
        }
        Ok((worst, ratios))
    })?;
    let worst = max_of(rows.iter().map(|r| r.0));
    let ratios: Vec<f64> = rows.iter().flat_map(|r| r.1.iter().copied()).collect();
    let lo = min_of(ratios.iter().copied());
    let hi = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let in_band = ratios.iter().all(|r| *r >= RATIO_BAND.0 && *r <= RATIO_BAND.1);
    let p = params! {"seed" => seed, "trials" => trials, "times" => times, "dt" => dt, "chains" => source.describe()};
    let mut pr = p.clone();
    pr.insert("ratio_dt".into(), ratio_dt.into());
    pr.insert("ratio_min".into(), lo.into());
    pr.insert("ratio_max".into(), hi.into());
    let deviation = (lo - 4.0).abs().max((hi - 4.0).abs());
    let mut ratio_report = VerificationReport::residual(
        "markov.dissipation_order",
        pr,
        hi,
        Some(4.0),
        deviation,
        RATIO_BAND.1 - 4.0,
    );
    ratio_report.pass = in_band;
    Ok(vec![
        VerificationReport::residual("markov.dissipation", p, worst, Some(0.0), worst, DISSIPATION_TOLERANCE),
        ratio_report,
    ])
}

/// All chain suites with their default sizes scaled by `trials`.
pub fn all(source: &ChainSource, seed: u64, trials: usize) -> Result<Vec<VerificationReport>, MarkovError> {
    let mut out = vec![lifting_identity(source, seed, trials)?];
    out.extend(lifting_inequality(source, seed.wrapping_add(1), trials)?);
    out.extend(entropy_lifting(source, seed.wrapping_add(2), trials)?);
    out.push(symmetric_form(source, seed.wrapping_add(3), trials)?);
    out.push(key_inequality(seed.wrapping_add(4), trials)?);
    Ok(out)
}
