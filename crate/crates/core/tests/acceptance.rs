//! Acceptance checks, one line per criterion. Run with
//! `cargo test --test acceptance`; exits nonzero if any gating check fails.

use std::time::Instant;

use nlfisher::fractional::{
    bsi_slack, divergence_probe, fisher_classical, fisher_fractional, limit_sweep, normalization_constant,
    normalization_constant_quadrature, scaling_check, DensityModel, FracError, FracKernelSpec,
};
use nlfisher::gamma_calculus::{
    fisher_gamma, fisher_gamma_product, mixture_density, reference_density, reference_density_alt,
    verify_diffusion_chain_rule, verify_projection_inequality, DiffusionOperator1D, SmoothFunction, SmoothFunction2D,
};
use nlfisher::markov::suite::{self, ChainSource, DISSIPATION_STEP, RATIO_STEP};
use nlfisher::markov::{fisher_nonlocal, lift_chain, ChainModel, ChainSpec, DiscreteDensity, LiftedDensity};
use nlfisher::quadrature::QuadConfig;
use nlfisher::report::VerificationReport;

type Check = Result<(bool, String), String>;

fn all_pass(records: &[VerificationReport]) -> (bool, String) {
    let detail = records
        .iter()
        .map(|r| format!("{}={:.3e}", r.check, r.residual_or_slack))
        .collect::<Vec<_>>()
        .join(" ");
    (records.iter().all(|r| r.pass), detail)
}

fn c1_lifting_identity() -> Check {
    let r = suite::lifting_identity(&ChainSource::Random { min_n: 2, max_n: 5 }, 1, 1000).map_err(|e| e.to_string())?;
    Ok(all_pass(&[r]))
}

fn c2_lifting_inequality() -> Check {
    let r = suite::lifting_inequality(&ChainSource::Random { min_n: 3, max_n: 3 }, 2, 10_000).map_err(|e| e.to_string())?;
    Ok(all_pass(&r))
}

fn c3_entropy_lifting() -> Check {
    let r = suite::entropy_lifting(&ChainSource::Random { min_n: 3, max_n: 3 }, 3, 10_000).map_err(|e| e.to_string())?;
    Ok(all_pass(&r))
}

fn c4_key_inequality() -> Check {
    let r = suite::key_inequality(4, 10_000).map_err(|e| e.to_string())?;
    Ok(all_pass(&[r]))
}

fn c5_dissipation() -> Check {
    let r = suite::dissipation(
        &ChainSource::Random { min_n: 2, max_n: 5 },
        5,
        100,
        &[0.0, 0.5, 2.0],
        DISSIPATION_STEP,
        RATIO_STEP,
    )
    .map_err(|e| e.to_string())?;
    Ok(all_pass(&r))
}

fn c6_hand_value() -> Check {
    let chain = ChainModel::try_from(ChainSpec {
        n: 2,
        rates: vec![vec![0.0, 1.0], vec![1.0, 0.0]],
        mu: vec![1.0, 1.0],
        reversible: None,
    })
    .map_err(|e| e.to_string())?;
    let f = DiscreteDensity::new(vec![0.75, 0.25], chain.mu()).map_err(|e| e.to_string())?;
    let i = fisher_nonlocal(&chain, &f).map_err(|e| e.to_string())?;
    let lifted = lift_chain(&chain).map_err(|e| e.to_string())?;
    let ff = DiscreteDensity::new(LiftedDensity::tensor_square(&f).values().to_vec(), lifted.mu()).map_err(|e| e.to_string())?;
    let i2 = fisher_nonlocal(&lifted, &ff).map_err(|e| e.to_string())?;
    let ln3 = 3f64.ln();
    let (e1, e2) = ((i - 0.5 * ln3).abs(), (i2 - ln3).abs());
    Ok((e1 <= 1e-12 && e2 <= 1e-10, format!("i_k={i:.15} err={e1:.1e} lifted={i2:.15} err={e2:.1e}")))
}

fn c7_constants() -> Check {
    let cfg = QuadConfig::default();
    let mut worst = 0.0f64;
    let mut points = 0;
    for d in [1, 2] {
        for s in [0.1, 0.25, 0.5, 0.75, 0.9] {
            let closed = normalization_constant(d, s).map_err(|e| e.to_string())?;
            let quad = normalization_constant_quadrature(d, s, &cfg).map_err(|e| e.to_string())?;
            worst = worst.max(((closed - quad.value) / quad.value).abs());
            points += 1;
        }
    }
    let half = (normalization_constant(1, 0.5).unwrap() - std::f64::consts::FRAC_1_PI).abs();
    let s = 0.999;
    let l1 = normalization_constant(1, s).unwrap() / (1.0 - s);
    let l2 = normalization_constant(2, s).unwrap() / (1.0 - s);
    let four_over_pi = 4.0 / std::f64::consts::PI;
    let (r1, r2) = (((l1 - 2.0) / 2.0).abs(), ((l2 - four_over_pi) / four_over_pi).abs());
    Ok((
        worst <= 1e-6 && half <= 1e-6 && r1 <= 0.01 && r2 <= 0.01,
        format!("{points} points max rel {worst:.1e}; c(1,.5) err {half:.1e}; limits rel {r1:.2e}, {r2:.2e}"),
    ))
}

fn c8_classical() -> Check {
    let cfg = QuadConfig::default();
    let cauchy = fisher_classical(&DensityModel::cauchy(1.0, 1).map_err(|e| e.to_string())?, &cfg).map_err(|e| e.to_string())?;
    let mut worst = (cauchy.value - 0.5).abs();
    for sigma in [0.5, 1.0, 2.0] {
        let g = DensityModel::gaussian(sigma, 1).map_err(|e| e.to_string())?;
        let v = fisher_classical(&g, &cfg).map_err(|e| e.to_string())?.value;
        worst = worst.max((v - 1.0 / (sigma * sigma)).abs());
    }
    Ok((worst <= 1e-8, format!("i(Cauchy)={:.12} max err {worst:.1e}", cauchy.value)))
}

fn c9_limit_sweep() -> Check {
    let cfg = QuadConfig::default();
    let grid = [0.6, 0.7, 0.8, 0.9, 0.95, 0.99];
    let mut ok = true;
    let mut detail = Vec::new();
    let densities = [
        ("cauchy", DensityModel::cauchy(1.0, 1).map_err(|e| e.to_string())?),
        ("exp_power", DensityModel::exp_power(1.0, 1.0, 1).map_err(|e| e.to_string())?),
    ];
    for (name, f) in densities {
        let sweep = limit_sweep(&f, &grid, &cfg).map_err(|e| e.to_string())?;
        let i = sweep.i_classical.value;
        let last = sweep.rows.last().unwrap().deviation;
        let pass = sweep.deviation_decreasing(3) && last < 0.15 * i && sweep.all_converged();
        ok &= pass;
        detail.push(format!("{name}: i={i:.6} final dev {last:.4} ({:.2}%)", 100.0 * last / i));
    }
    Ok((ok, detail.join("; ")))
}

fn c10_scaling() -> Check {
    let cfg = QuadConfig::default();
    let f = DensityModel::cauchy(1.0, 1).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for s in [0.3, 0.6, 0.9] {
        let spec = FracKernelSpec::new(1, s).map_err(|e| e.to_string())?;
        for c in [0.5, 2.0] {
            let out = scaling_check(&f, c, &spec, &cfg).map_err(|e| e.to_string())?;
            worst = worst.max((out.ratio - 1.0).abs());
        }
    }
    Ok((worst <= 0.02, format!("max |ratio - 1| = {worst:.1e}")))
}

fn c11_bsi() -> Check {
    let cfg = QuadConfig::default();
    let f = DensityModel::cauchy(1.0, 1).map_err(|e| e.to_string())?;
    let g = DensityModel::cauchy(2.0, 1).map_err(|e| e.to_string())?;
    let alphas = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];
    let orders = [0.3, 0.5, 0.7, 0.9];
    let mut min_margin = f64::INFINITY;
    let mut count = 0;
    let mut ok = true;
    for &s in &orders {
        let spec = FracKernelSpec::new(1, s).map_err(|e| e.to_string())?;
        for &a in &alphas {
            let out = bsi_slack(&f, &g, a, &spec, &cfg).map_err(|e| e.to_string())?;
            ok &= out.holds();
            min_margin = min_margin.min(out.slack + out.error);
            count += 1;
        }
    }
    let mut worst_rel = 0.0f64;
    for &s in &orders {
        let spec = FracKernelSpec::new(1, s).map_err(|e| e.to_string())?;
        let out = bsi_slack(&f, &f, 0.5, &spec, &cfg).map_err(|e| e.to_string())?;
        let analytic = (2f64.powf(1.0 - s) - 2f64.powf(-s)) * out.i_f.value;
        worst_rel = worst_rel.max(((out.slack - analytic) / analytic).abs());
    }
    ok &= worst_rel <= 0.02;
    Ok((
        ok,
        format!("{count} grid points, min slack+error {min_margin:.3e}; f=g analytic rel err {worst_rel:.1e}"),
    ))
}

fn c12_divergence() -> Check {
    let cfg = QuadConfig::default();
    let f = DensityModel::gaussian(1.0, 1).map_err(|e| e.to_string())?;
    let mut ok = true;
    let mut detail = Vec::new();
    for s in [0.5, 0.9] {
        let probe = divergence_probe(&f, s, &[4.0, 8.0, 16.0, 32.0], &cfg).map_err(|e| e.to_string())?;
        let spec = FracKernelSpec::new(1, s).map_err(|e| e.to_string())?;
        let flagged = matches!(fisher_fractional(&f, &spec, &cfg), Err(FracError::DivergenceSuspected { .. }));
        ok &= probe.strictly_increasing && flagged;
        detail.push(format!(
            "s={s}: truncations {:?} flagged={flagged}",
            probe.values.iter().map(|v| format!("{v:.3e}")).collect::<Vec<_>>()
        ));
    }
    Ok((ok, detail.join("; ")))
}

fn c13_gamma() -> Check {
    let cfg = QuadConfig::default();
    let op = DiffusionOperator1D::laguerre(1.0).map_err(|e| e.to_string())?;
    let f = SmoothFunction::identity();
    let single = fisher_gamma(&op, &f, &cfg).map_err(|e| e.to_string())?.value;
    let product = fisher_gamma_product(&op, &SmoothFunction2D::tensor(&f, &f), &cfg)
        .map_err(|e| e.to_string())?
        .value;
    let mut min_slack = f64::INFINITY;
    let mut chain = 0.0f64;
    let ops = [op, DiffusionOperator1D::jacobi(2.0, 3.0).map_err(|e| e.to_string())?];
    for op in &ops {
        let (f, g) = (reference_density(op), reference_density_alt(op));
        let proj = verify_projection_inequality(op, &mixture_density(&f, &g), &cfg).map_err(|e| e.to_string())?;
        min_slack = min_slack.min(proj.slack);
        let (lo, hi) = op.domain();
        let hi = if hi.is_finite() { hi } else { lo + 5.0 };
        let points: Vec<f64> = (1..20).map(|i| lo + (hi - lo) * i as f64 / 20.0).collect();
        let square = SmoothFunction::polynomial(vec![0.0, 0.0, 1.0]);
        chain = chain.max(verify_diffusion_chain_rule(op, &SmoothFunction::ln(), &f, &g, &points).map_err(|e| e.to_string())?);
        chain = chain.max(verify_diffusion_chain_rule(op, &square, &g, &f, &points).map_err(|e| e.to_string())?);
    }
    let ok = (single - 1.0).abs() <= 1e-6 && (product - 2.0).abs() <= 1e-4 && min_slack >= -1e-4 && chain <= 1e-10;
    Ok((
        ok,
        format!("i_L={single:.10} product={product:.10} min projection slack {min_slack:.3e} chain rule {chain:.1e}"),
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 13] = [
        ("discrete lifting identity", c1_lifting_identity),
        ("discrete lifting inequality", c2_lifting_inequality),
        ("entropy lifting", c3_entropy_lifting),
        ("key inequality slack", c4_key_inequality),
        ("entropy dissipation", c5_dissipation),
        ("two-state hand value", c6_hand_value),
        ("normalization constant", c7_constants),
        ("classical Fisher oracles", c8_classical),
        ("limit sweep s -> 1", c9_limit_sweep),
        ("scaling law", c10_scaling),
        ("Blachman-Stam sweep", c11_bsi),
        ("Gaussian divergence probe", c12_divergence),
        ("carre du champ identities", c13_gamma),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (pass, detail) = match check() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        let secs = start.elapsed().as_secs_f64();
        if !pass {
            failures += 1;
        }
        println!(
            "criterion {:>2} {}: {name} [{secs:.2}s] {detail}",
            i + 1,
            if pass { "PASS" } else { "FAIL" }
        );
    }
    println!("criterion 14 SKIP: continuous lifting identity (optional, not implemented)");
    if failures > 0 {
        println!("{failures} criterion/criteria failed");
        std::process::exit(1);
    }
}
