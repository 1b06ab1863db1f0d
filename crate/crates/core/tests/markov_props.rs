use nlfisher::kernels::{generator_apply, key_inequality_slack, psi_upsilon, tensorize, upsilon, FiniteKernel};
use nlfisher::markov::sample::{
    random_density, random_kernel, random_measure, random_positive_matrix, random_positive_vector,
    random_reversible_chain, random_symmetric_lifted, trial_rng,
};
use nlfisher::markov::{
    covariance_functional, entropy, fisher_nonlocal, fisher_symmetric_form, heat_flow, verify_entropy_lifting,
    verify_lifting_identity, verify_lifting_inequality, ChainModel, DiscreteDensity, LiftedDensity,
};
use proptest::prelude::*;

fn components(k: &FiniteKernel) -> Vec<usize> {
    let n = k.n();
    let mut label = vec![usize::MAX; n];
    let mut next = 0;
    for start in 0..n {
        if label[start] != usize::MAX {
            continue;
        }
        let mut stack = vec![start];
        label[start] = next;
        while let Some(x) = stack.pop() {
            for y in 0..n {
                if label[y] == usize::MAX && (k.rate(x, y) > 0.0 || k.rate(y, x) > 0.0) {
                    label[y] = next;
                    stack.push(y);
                }
            }
        }
        next += 1;
    }
    label
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn upsilon_is_nonnegative(r in -700.0f64..700.0) {
        prop_assert!(upsilon(r) >= 0.0);
    }

    #[test]
    fn psi_upsilon_is_nonnegative(seed: u64, n in 1usize..7) {
        let mut rng = trial_rng(seed, 0);
        let k = random_kernel(&mut rng, n);
        let g: Vec<f64> = random_positive_vector(&mut rng, n).iter().map(|v| 5.0 * v.ln()).collect();
        prop_assert!(psi_upsilon(&k, &g).unwrap().iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn fundamental_identity(seed: u64, n in 1usize..7) {
        let mut rng = trial_rng(seed, 1);
        let k = random_kernel(&mut rng, n);
        let f = random_positive_vector(&mut rng, n);
        let lf: Vec<f64> = f.iter().map(|v| v.ln()).collect();
        let l_log = generator_apply(&k, &lf).unwrap();
        let psi = psi_upsilon(&k, &lf).unwrap();
        let l_f = generator_apply(&k, &f).unwrap();
        for x in 0..n {
            prop_assert!((l_log[x] + psi[x] - l_f[x] / f[x]).abs() <= 1e-12);
        }
    }

    #[test]
    fn tensor_rates_move_one_coordinate(seed: u64, n in 1usize..5, m in 1usize..5) {
        let mut rng = trial_rng(seed, 2);
        let (k1, k2) = (random_kernel(&mut rng, n), random_kernel(&mut rng, m));
        let t = tensorize(&k1, &k2).unwrap();
        prop_assert!(t.nnz() <= n * m * (n + m - 2));
        for a in 0..n * m {
            for b in 0..n * m {
                let ((i, j), (i2, j2)) = ((a / m, a % m), (b / m, b % m));
                if i != i2 && j != j2 {
                    prop_assert_eq!(t.rate(a, b), 0.0);
                }
            }
        }
    }

    #[test]
    fn fisher_is_nonnegative_and_vanishes_on_components(seed: u64, n in 1usize..7) {
        let mut rng = trial_rng(seed, 3);
        let k = random_kernel(&mut rng, n);
        let mu = random_measure(&mut rng, n);
        let chain = ChainModel::detect(k.clone(), mu.clone()).unwrap();
        let f = random_density(&mut rng, &mu);
        prop_assert!(fisher_nonlocal(&chain, &f).unwrap() >= 0.0);

        let label = components(&k);
        let levels = random_positive_vector(&mut rng, n);
        let flat = DiscreteDensity::normalized(label.iter().map(|c| levels[*c]).collect(), &mu).unwrap();
        prop_assert!(fisher_nonlocal(&chain, &flat).unwrap().abs() <= 1e-13);
    }

    #[test]
    fn heat_flow_conserves_mass_and_dissipates_entropy(seed: u64, n in 2usize..6) {
        let mut rng = trial_rng(seed, 4);
        let chain = random_reversible_chain(&mut rng, n);
        let f = random_density(&mut rng, chain.mu());
        let mut previous = f64::INFINITY;
        for i in 0..=20 {
            let t = 0.5 * i as f64;
            let ft = heat_flow(&chain, &f, t).unwrap();
            let mass = chain.mu().integrate(ft.values()).unwrap();
            prop_assert!((mass - 1.0).abs() <= 1e-10);
            let h = entropy(&chain, &ft).unwrap();
            prop_assert!(h <= previous + 1e-13);
            previous = h;
        }
    }

    #[test]
    fn lifting_and_covariance(seed: u64, n in 2usize..6) {
        let mut rng = trial_rng(seed, 5);
        let chain = random_reversible_chain(&mut rng, n);
        let f = random_density(&mut rng, chain.mu());
        let big_f = random_symmetric_lifted(&mut rng, chain.mu());
        prop_assert!(verify_lifting_identity(&chain, &f).unwrap() <= 1e-10);
        prop_assert!(verify_lifting_inequality(&chain, &big_f).unwrap() >= -1e-10);
        let (residual, slack) = verify_entropy_lifting(&chain, &f, &big_f).unwrap();
        prop_assert!(residual <= 1e-12);
        prop_assert!(slack >= -1e-10);
        prop_assert!(covariance_functional(&big_f, &chain, None).unwrap() >= 0.0);
        let ff = LiftedDensity::tensor_square(&f);
        prop_assert!(covariance_functional(&ff, &chain, None).unwrap() <= 1e-24);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn symmetric_form_agrees_on_reversible_chains(seed: u64, n in 1usize..6) {
        let mut rng = trial_rng(seed, 6);
        let chain = random_reversible_chain(&mut rng, n);
        let f = random_density(&mut rng, chain.mu());
        let a = fisher_nonlocal(&chain, &f).unwrap();
        let b = fisher_symmetric_form(&chain, &f).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
    }

    #[test]
    fn key_inequality_slack_is_nonnegative(seed: u64, n in 1usize..5, m in 1usize..5) {
        let mut rng = trial_rng(seed, 7);
        let k = random_kernel(&mut rng, n);
        let h = random_positive_matrix(&mut rng, n, m);
        let f = random_positive_vector(&mut rng, m);
        let nu = random_measure(&mut rng, m);
        for x in 0..n {
            prop_assert!(key_inequality_slack(&k, &h, &f, &nu, x).unwrap() >= -1e-10);
        }
    }
}
