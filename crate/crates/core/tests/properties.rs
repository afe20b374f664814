use approx::assert_relative_eq;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use thermolab_core::discretization::{apply_generator, assemble, static_solve, Grid, SemiDiscreteSystem, Variant};
use thermolab_core::dynamics::{
    fit_decay, initial_state, lyapunov, lyapunov_cross_constant, simulate, EnergyTrace, InitialData, Scheme,
    SimConfig,
};
use thermolab_core::envelope::{build_envelope, estimate_c_lemma, DampingLaw};
use thermolab_core::material::{
    check_positivity, derive_isotropic, expand_isotropic, CoefficientSet, IsotropicParams, Tensor,
};
use thermolab_core::modes::{solve_mode_system, verify_fields_bc, Ansatz, ModeSolution};
use thermolab_core::observability::{observability_constant, AbstractPair};

fn cfg(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        ..ProptestConfig::default()
    }
}

prop_compose! {
    fn iso_params(dim: usize)(
        rho in 0.5..2.0f64, a in 0.5..2.0f64,
        mu in 0.2..2.0f64, lam_frac in -0.4..2.0f64,
        beta in 0.0..1.0f64, delta in 0.1..1.5f64,
        a1 in 0.0..0.3f64, a2 in 0.0..0.3f64, a3 in 0.1..1.0f64, a4 in 0.1..1.0f64, a5 in 0.0..0.3f64,
        m1 in -0.1..0.1f64, m2 in -0.1..0.1f64,
    ) -> IsotropicParams {
        IsotropicParams {
            dim, rho, a, mu, lambda: lam_frac * mu, beta, delta,
            a1, a2, a3, a4, a5, m1, m2,
            ..IsotropicParams::default()
        }.derive()
    }
}

fn random_tensor(rng: &mut ChaCha8Rng, dim: usize, rank: usize) -> Tensor {
    let vals: Vec<f64> = (0..dim.pow(rank as u32)).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
    let mut t = Tensor::zeros(dim, rank);
    let mut k = 0;
    Tensor::from_fn(dim, rank, |_| 0.0).entries().for_each(|(idx, _)| {
        t.set(&idx, vals[k]);
        k += 1;
    });
    t
}

fn max_diff(a: &Tensor, b: &Tensor) -> f64 {
    a.entries().map(|(i, v)| (v - b.get(&i)).abs()).fold(0.0, f64::max)
}

fn small_system(p: &IsotropicParams, variant: Variant, n: usize) -> Option<SemiDiscreteSystem> {
    let c = expand_isotropic(p).ok()?;
    assemble(&Grid::uniform(p.dim, n), &c, variant, None).ok()
}

fn random_state(sys: &SemiDiscreteSystem, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..sys.layout.len()).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect()
}

fn variant_params(mut p: IsotropicParams, variant: Variant) -> IsotropicParams {
    match variant {
        Variant::KelvinVoigt => p.kelvin_voigt = 0.3,
        Variant::Frictional => p.friction = 0.7,
        Variant::Cattaneo => p.kappa = 0.5,
    }
    p
}

fn variant() -> impl Strategy<Value = Variant> {
    prop_oneof![Just(Variant::KelvinVoigt), Just(Variant::Frictional), Just(Variant::Cattaneo)]
}

proptest! {
    #![proptest_config(cfg(32))]

    #[test]
    fn symmetrize_is_idempotent(seed in any::<u64>(), dim in 1usize..=2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut c = CoefficientSet::zeros(dim, 1.0, 1.0);
        c.a4 = random_tensor(&mut rng, dim, 4);
        c.c6 = random_tensor(&mut rng, dim, 6);
        c.m4 = random_tensor(&mut rng, dim, 4);
        c.k2 = random_tensor(&mut rng, dim, 2);
        c.b4 = random_tensor(&mut rng, dim, 4);
        c.symmetrize();
        let once = c.clone();
        c.symmetrize();
        for (x, y) in [(&once.a4, &c.a4), (&once.c6, &c.c6), (&once.m4, &c.m4), (&once.k2, &c.k2), (&once.b4, &c.b4)] {
            prop_assert!(max_diff(x, y) <= 1e-14);
        }
    }

    #[test]
    fn derive_is_idempotent(p in iso_params(2)) {
        let once = derive_isotropic(p);
        let twice = derive_isotropic(once.clone());
        prop_assert_eq!(&once, &twice);
        assert_relative_eq!(once.b2, once.b4 + 2.0 * once.b3, epsilon = 1e-14);
        assert_relative_eq!(once.b1, once.b3 + once.b4, epsilon = 1e-14);
    }

    /// Without coupling the 1D forms are scalars: the displacement-gradient modulus
    /// `λ + 2μ`, and the smaller of the sixth-order modulus and the heat modulus.
    #[test]
    fn positivity_1d_scalars(p in iso_params(1)) {
        let mut p = p;
        p.m1 = 0.0;
        p.m2 = 0.0;
        let c = expand_isotropic(&p).unwrap();
        let r = check_positivity(&c);
        assert_relative_eq!(r.gradient_min_eig, p.lambda + 2.0 * p.mu, max_relative = 1e-12);
        let c6 = c.c6.get(&[0; 6]);
        let k = c.k2.get(&[0, 0]);
        assert_relative_eq!(r.joint_min_eig, c6.min(k), max_relative = 1e-12);
        assert_relative_eq!(c6, p.b1, max_relative = 1e-12);
    }

    #[test]
    fn mode_solutions_satisfy_sum_identity(p in iso_params(2), n in 1u32..200) {
        if let Ok(s) = solve_mode_system(&p, n) {
            let sum = s.a + s.b;
            prop_assert!((sum - Complex64::new(2.0 * p.rho, 0.0)).norm() <= 1e-12 * p.rho);
            prop_assert!(s.residual <= 1e-9);
        }
    }

    #[test]
    fn ansatz_meets_boundary_conditions_for_any_amplitudes(
        p in iso_params(2), n in 1u32..40,
        re in prop::array::uniform3(-10.0..10.0f64), im in prop::array::uniform3(-10.0..10.0f64),
    ) {
        let s = ModeSolution {
            n,
            lambda_n: 1.0,
            a: Complex64::new(re[0], im[0]),
            b: Complex64::new(re[1], im[1]),
            c: Complex64::new(re[2], im[2]),
            residual: 0.0,
            u_lower: 0.0,
            velocity_norm: 0.0,
        };
        let report = verify_fields_bc(&p, &Ansatz::from_solution(&s), 16);
        prop_assert!(report.max_relative() <= 1e-12, "{}", report.max_relative());
    }
}

proptest! {
    #![proptest_config(cfg(16))]

    #[test]
    fn conservative_part_is_skew_and_damping_dissipates(
        p in iso_params(1), dim in 1usize..=2, v in variant(), seed in any::<u64>(),
    ) {
        let p = variant_params(IsotropicParams { dim, ..p }, v);
        let n = if dim == 1 { 14 } else { 6 };
        let sys = small_system(&p, v, n);
        prop_assume!(sys.is_some());
        let sys = sys.unwrap();
        let x = random_state(&sys, seed);
        let jx = sys.apply_conservative(&x);
        let norm = |y: &[f64]| sys.energy_inner(y, y).sqrt();
        let skew = sys.energy_inner(&x, &jx);
        prop_assert!(skew.abs() <= 1e-10 * norm(&x) * norm(&jx), "skew {skew}");
        let gx = apply_generator(&sys, &x);
        let rate = sys.energy_inner(&x, &gx);
        let d = sys.dissipation(&x);
        prop_assert!(d >= 0.0);
        prop_assert!((rate + d).abs() <= 1e-10 * norm(&x) * norm(&gx), "rate {rate} dissipation {d}");
    }

    #[test]
    fn static_solve_is_linear(p in iso_params(1), v in variant(), seed in any::<u64>()) {
        let p = variant_params(p, v);
        let sys = small_system(&p, v, 16);
        prop_assume!(sys.is_some());
        let sys = sys.unwrap();
        let mut f = sys.zero_state();
        f.data = random_state(&sys, seed);
        let u1 = static_solve(&sys, &f).unwrap();
        let mut f10 = f.clone();
        f10.data.iter_mut().for_each(|x| *x *= 10.0);
        let u10 = static_solve(&sys, &f10).unwrap();
        let scale = u1.state.data.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for (a, b) in u1.state.data.iter().zip(&u10.state.data) {
            prop_assert!((10.0 * a - b).abs() <= 1e-9 * 10.0 * scale);
        }
    }

    #[test]
    fn backward_euler_energy_never_increases(p in iso_params(1), v in variant(), seed in 0u64..1000) {
        let p = variant_params(p, v);
        let sys = small_system(&p, v, 16);
        prop_assume!(sys.is_some());
        let sys = sys.unwrap();
        let x0 = initial_state(&sys, &InitialData::parse(&format!("smooth:{seed}")).unwrap()).unwrap();
        let cfg = SimConfig { dt: 0.05, t_final: 2.0, scheme: Scheme::BackwardEuler, ..SimConfig::default() };
        let tr = simulate(&sys, &x0, &cfg).unwrap();
        for w in tr.energy.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12));
        }
    }

    /// `(N − C̃) E ≤ F ≤ (N + C̃) E` for the computed cross constant.
    #[test]
    fn lyapunov_equivalence_band(p in iso_params(1), seed in any::<u64>(), big_n in 1.0..20.0f64) {
        let p = variant_params(p, Variant::Frictional);
        let sys = small_system(&p, Variant::Frictional, 16);
        prop_assume!(sys.is_some());
        let sys = sys.unwrap();
        let ct = lyapunov_cross_constant(&sys).unwrap();
        let x = random_state(&sys, seed);
        let e = sys.energy(&x);
        let f = lyapunov(&sys, &x, big_n);
        prop_assert!(f <= (big_n + ct) * e * (1.0 + 1e-12));
        prop_assert!(f >= (big_n - ct) * e * (1.0 - 1e-12) - 1e-14 * e);
    }
}

proptest! {
    #![proptest_config(cfg(32))]

    #[test]
    fn fit_recovers_synthetic_exponential(rate in 0.3..2.0f64, wiggle in 0.0..0.2f64) {
        let times: Vec<f64> = (0..=800).map(|k| k as f64 * 0.05).collect();
        let energy: Vec<f64> = times.iter().map(|t| (-rate * t).exp() * (1.0 + wiggle * (3.0 * t).sin().powi(2))).collect();
        let fit = fit_decay(&times, &energy).unwrap();
        prop_assert!(fit.bound_holds());
        if wiggle == 0.0 {
            assert_relative_eq!(fit.c0, rate, max_relative = 1e-9);
            assert_relative_eq!(fit.c, 1.0, max_relative = 1e-9);
        }
        prop_assert!((fit.c0 - rate).abs() <= 0.05 * rate + 1e-3);
    }

    #[test]
    fn c_lemma_grows_with_runs(seeds in prop::collection::vec(any::<u64>(), 1..8)) {
        let runs: Vec<EnergyTrace> = seeds
            .iter()
            .map(|&s| {
                let mut rng = ChaCha8Rng::seed_from_u64(s);
                let mut tr = EnergyTrace::empty("synthetic");
                let (mut e, mut obs) = (rng.gen_range(0.2..1.0), 0.0);
                for k in 0..=8 {
                    tr.times.push(k as f64 * 0.5);
                    tr.energy.push(e);
                    tr.observed.push(obs);
                    tr.dissipation.push(0.0);
                    e *= rng.gen_range(0.3..0.95);
                    obs += rng.gen_range(0.01..1.0);
                }
                tr
            })
            .collect();
        let mut last = 0.0;
        for k in 1..=runs.len() {
            let est = estimate_c_lemma(&runs[..k], 1.0, None).unwrap();
            prop_assert!(est.c >= last);
            prop_assert_eq!(est.windows, 4 * k);
            last = est.c;
        }
    }

    #[test]
    fn majorant_is_concave(alpha in 0.1..3.0f64, p in 1.0..4.0f64, z1 in 0.0..2.0f64, z2 in 0.0..2.0f64) {
        let law = DampingLaw::power_saturated(alpha, p);
        let h = |z: f64| law.majorant(z).unwrap();
        prop_assert!(h(0.5 * (z1 + z2)) >= 0.5 * (h(z1) + h(z2)) * (1.0 - 1e-12));
    }
}

proptest! {
    #![proptest_config(cfg(24))]

    #[test]
    fn envelope_maps_are_consistent(
        alpha in 0.2..2.0f64, p in 1.0..3.0f64, linear in any::<bool>(),
        c_lemma in 0.1..5.0f64, s1 in 0.0..5.0f64, s2 in 0.0..5.0f64,
    ) {
        let law = if linear { DampingLaw::linear(alpha) } else { DampingLaw::power_saturated(alpha, p) };
        let env = build_envelope(&law, 2.0, std::f64::consts::PI, c_lemma, 1.0).unwrap();
        for s in [s1, s2] {
            let x = env.inv_i_plus_p(s);
            prop_assert!((x + env.p(x) - s).abs() <= 2e-12 * s.max(1.0));
            prop_assert!(env.q(s) >= 0.0);
        }
        let (lo, hi) = if s1 <= s2 { (s1, s2) } else { (s2, s1) };
        prop_assert!(env.q(lo) <= env.q(hi) + 1e-12);
        prop_assert!(env.integrate(hi, 20.0).is_monotone());
    }

    #[test]
    fn observability_constant_scaling(n in 3usize..10, seed in any::<u64>()) {
        let pair = AbstractPair::random(n, n, seed);
        let c1 = observability_constant(&pair, 1.0, 0.01, 8, seed).unwrap();
        let c2 = observability_constant(&pair, 2.0, 0.01, 8, seed).unwrap();
        prop_assert!(c2.c <= c1.c * (1.0 + 1e-9));
        let doubled = AbstractPair::new(pair.a_gen.clone(), &pair.b_obs * 2.0).unwrap();
        let cd = observability_constant(&doubled, 1.0, 0.01, 8, seed).unwrap();
        assert_relative_eq!(cd.c, 0.5 * c1.c, max_relative = 1e-9);
    }
}
