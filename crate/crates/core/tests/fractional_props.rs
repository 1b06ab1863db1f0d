use nlfisher::fractional::{
    fisher_fractional, limit_sweep, normalization_constant, normalization_constant_quadrature, scaling_check,
    DensityModel, FracKernelSpec,
};
use nlfisher::quadrature::{integrate_axis, Axis, QuadConfig};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn translation_invariance_and_sign(gamma in 0.5f64..2.0, s in 0.2f64..0.95, m in -3.0f64..3.0) {
        let cfg = QuadConfig::default();
        let f = DensityModel::cauchy(gamma, 1).unwrap();
        let spec = FracKernelSpec::new(1, s).unwrap();
        let base = fisher_fractional(&f, &spec, &cfg).unwrap();
        let moved = fisher_fractional(&f.shifted(&[m]).unwrap(), &spec, &cfg).unwrap();
        prop_assert!(base.value >= 0.0);
        prop_assert!((moved.value - base.value).abs() <= 1e-7 * base.value);
    }

    #[test]
    fn exp_power_scaling(beta in 0.5f64..1.0, s in 0.5f64..0.95, pick in 0usize..3) {
        let cfg = QuadConfig::default();
        let c = [0.5, 2.0, 4.0][pick];
        let f = DensityModel::exp_power(beta, 1.0, 1).unwrap();
        let spec = FracKernelSpec::new(1, s).unwrap();
        let out = scaling_check(&f, c, &spec, &cfg).unwrap();
        prop_assert!((out.ratio - 1.0).abs() <= 0.02, "ratio {}", out.ratio);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn constant_matches_its_defining_integral(d in 1usize..3, s in 0.05f64..0.98) {
        let cfg = QuadConfig::default();
        let closed = normalization_constant(d, s).unwrap();
        let quad = normalization_constant_quadrature(d, s, &cfg).unwrap();
        prop_assert!(closed > 0.0);
        prop_assert!(((closed - quad.value) / closed).abs() <= 1e-6);
    }

    #[test]
    fn log_ratio_matches_difference(
        family in 0usize..3,
        x in -30.0f64..30.0,
        h in -10.0f64..10.0,
        m in -2.0f64..2.0,
    ) {
        let f = match family {
            0 => DensityModel::cauchy(1.3, 1),
            1 => DensityModel::gaussian(0.7, 1),
            _ => DensityModel::exp_power(1.5, 0.8, 1),
        }
        .unwrap()
        .shifted(&[m])
        .unwrap();
        let direct = f.log_density(&[x + h]) - f.log_density(&[x]);
        prop_assert!((f.log_ratio(&[x], &[h]) - direct).abs() <= 1e-9 * (1.0 + direct.abs()));
    }

    #[test]
    fn rescaling_preserves_mass(family in 0usize..3, c in 0.3f64..3.0, m in -1.0f64..1.0) {
        let f = match family {
            0 => DensityModel::cauchy(1.0, 1),
            1 => DensityModel::gaussian(1.0, 1),
            _ => DensityModel::exp_power(0.8, 1.0, 1),
        }
        .unwrap()
        .shifted(&[m])
        .unwrap()
        .rescale(c)
        .unwrap();
        let axis = Axis::line(vec![f.shift()[0]], f.scale(), f.x_tail_model());
        let mass = integrate_axis(|x| f.density(&[x]), &axis, &QuadConfig::default()).unwrap();
        prop_assert!((mass.value - 1.0).abs() <= 1e-8);
        prop_assert!((f.density(&[c * 0.3]) - f.rescale(1.0).unwrap().density(&[c * 0.3])).abs() == 0.0);
    }
}

#[test]
fn limit_deviations_decrease_near_one() {
    let cfg = QuadConfig::default();
    let grid = [0.6, 0.7, 0.8, 0.9, 0.95, 0.99];
    let corpus = [
        DensityModel::cauchy(0.5, 1).unwrap(),
        DensityModel::cauchy(2.0, 1).unwrap().shifted(&[1.0]).unwrap(),
        DensityModel::exp_power(0.7, 1.0, 1).unwrap(),
        DensityModel::exp_power(1.0, 2.0, 1).unwrap(),
    ];
    for f in corpus {
        let sweep = limit_sweep(&f, &grid, &cfg).unwrap();
        assert!(sweep.all_converged(), "{f:?}");
        assert!(sweep.deviation_decreasing(3), "{f:?}: {:?}", sweep.rows);
    }
}

#[test]
fn cauchy_sweep_follows_closed_form_even_when_not_monotone() {
    // i_s(Cauchy(γ)) = c(1,s) π (2γ)^{-2s} / (s sin πs) dips below i = 2 and
    // comes back for γ = 1/2
    let cfg = QuadConfig::default();
    let f = DensityModel::cauchy(0.5, 1).unwrap();
    let sweep = limit_sweep(&f, &[0.6, 0.7, 0.8], &cfg).unwrap();
    for row in &sweep.rows {
        let s = row.s;
        let exact = normalization_constant(1, s).unwrap() * std::f64::consts::PI
            / (s * (std::f64::consts::PI * s).sin());
        assert!((row.i_s - exact).abs() <= 1e-7 * exact, "s={s}: {} vs {exact}", row.i_s);
    }
    assert!(sweep.rows[1].deviation > sweep.rows[0].deviation);
}
