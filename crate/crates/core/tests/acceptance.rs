//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

mod support;

use std::f64::consts::PI;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use thermolab_core::discretization::{apply_generator, assemble, static_solve, Grid, SemiDiscreteSystem, StateVector, Variant};
use thermolab_core::dynamics::{
    fit_decay, initial_state, simulate, EnergyTrace, InitialData, Scheme, SimConfig,
};
use thermolab_core::envelope::{
    build_envelope, check_majorant, check_sequence_lemma, envelope_compare, estimate_c_lemma,
    DampingLaw,
};
use thermolab_core::material::{expand_isotropic, IsotropicParams};
use thermolab_core::modes::{resolvent_blowup_scan, verify_ansatz_bc, F_NORM_SQ};
use thermolab_core::observability::{from_discretization, verify_theorem_a, AbstractPair};

use support::{log_slope, simpson, Manufactured1d};

type Outcome = (bool, String);

fn section3() -> IsotropicParams {
    IsotropicParams {
        rho: 1.0,
        a: 1.0,
        lambda: 1.0,
        mu: 1.0,
        beta: 1.0,
        delta: 1.0,
        a3: 0.5,
        a4: 0.5,
        ..Default::default()
    }
}

fn params_1d(p: IsotropicParams) -> IsotropicParams {
    IsotropicParams { dim: 1, ..p }
}

fn system(p: &IsotropicParams, n: usize, variant: Variant, law: Option<DampingLaw>) -> SemiDiscreteSystem {
    let c = expand_isotropic(p).expect("coefficients");
    assemble(&Grid::uniform(p.dim, n), &c, variant, law).expect("assembly")
}

fn counterexample() -> Outcome {
    let p = section3();
    let table = resolvent_blowup_scan(&p, 64);
    let mut worst_res: f64 = 0.0;
    let mut worst_sum: f64 = 0.0;
    let mut worst_f: f64 = 0.0;
    let mut solved = 0;
    for s in table.solved() {
        solved += 1;
        worst_res = worst_res.max(s.residual);
        worst_sum = worst_sum.max(((s.a + s.b) - 2.0 * p.rho).norm());
        // forcing sin·sin, cos·cos, cos·sin integrated over the square
        let nf = s.n as f64;
        let one = |f: &dyn Fn(f64) -> f64| simpson(f, 0.0, PI, 2048);
        let ss = one(&|x| (nf * x).sin().powi(2));
        let cc = one(&|x| (nf * x).cos().powi(2));
        let quad = ss * ss + cc * cc + cc * ss;
        worst_f = worst_f.max((quad - F_NORM_SQ).abs()).max((F_NORM_SQ - 3.0 * PI * PI / 4.0).abs());
        let expected_lower = s.lambda_n * PI * p.rho / 2f64.sqrt();
        worst_sum = worst_sum.max((s.u_lower - expected_lower).abs() / expected_lower);
    }
    let ok = solved == 64
        && worst_res <= 1e-10
        && worst_sum <= 1e-9
        && worst_f <= 1e-12
        && table.monotone
        && (table.growth_exponent - 2.0).abs() <= 0.05;
    (
        ok,
        format!(
            "solved={solved} residual={worst_res:.2e} |A+B-2rho|={worst_sum:.2e} |F|^2 err={worst_f:.2e} exponent={:.4} monotone={}",
            table.growth_exponent, table.monotone
        ),
    )
}

fn boundary_conditions() -> Outcome {
    let p = section3();
    let table = resolvent_blowup_scan(&p, 64);
    let mut worst: f64 = 0.0;
    let mut names = 0;
    for s in table.solved() {
        let rep = verify_ansatz_bc(&p, s, 64);
        names = rep.conditions.len();
        worst = worst.max(rep.max_relative());
    }
    (worst <= 1e-12, format!("conditions={names} max relative residual={worst:.2e}"))
}

fn balance_order(sys: &SemiDiscreteSystem, x0: &StateVector, dt0: f64, t_final: f64) -> (f64, Vec<f64>) {
    let mut res = Vec::new();
    for k in 0..3 {
        let cfg = SimConfig {
            dt: dt0 / f64::powi(2.0, k),
            t_final,
            fp_tol: 1e-13,
            fp_max_iter: 200,
            ..Default::default()
        };
        let tr = simulate(sys, x0, &cfg).expect("simulation");
        res.push(tr.balance_trapezoid);
    }
    let order = (res[0] / res[1]).log2().min((res[1] / res[2]).log2());
    (order, res)
}

fn energy_identities() -> Outcome {
    let base = params_1d(section3());
    let n = 50;
    let mut ok = true;
    let mut msg = Vec::new();
    // dt levels resolve the fastest dissipative rate of each variant on the grid
    let cases: Vec<(Variant, IsotropicParams, Option<DampingLaw>, f64, f64)> = vec![
        (Variant::KelvinVoigt, IsotropicParams { kelvin_voigt: 0.5, ..base.clone() }, None, 1.0, 5e-4),
        (Variant::Frictional, IsotropicParams { friction: 1.0, ..base.clone() }, None, 1.0, 2e-3),
        (
            Variant::Cattaneo,
            IsotropicParams { kappa: 0.5, ..base.clone() },
            Some(DampingLaw::power_saturated(1.0, 2.0)),
            0.3,
            2e-3,
        ),
    ];
    for (variant, p, law, amp, dt0) in cases {
        let sys = system(&p, n, variant, law);
        let x0 = initial_state(&sys, &InitialData::Smooth { seed: 11, modes: 3, amplitude: amp, energy: None }).unwrap();
        let (order, res) = balance_order(&sys, &x0, dt0, 0.2);
        ok &= order >= 2.8;
        msg.push(format!("{}: order={order:.3} ({:.1e},{:.1e},{:.1e})", variant.name(), res[0], res[1], res[2]));
    }
    // conservative drift
    let p = IsotropicParams { delta: 0.0, ..base };
    let sys = system(&p, n, Variant::KelvinVoigt, None);
    let x0 = initial_state(&sys, &InitialData::Smooth { seed: 5, modes: 4, amplitude: 1.0, energy: None }).unwrap();
    let tr = simulate(&sys, &x0, &SimConfig { dt: 1e-3, t_final: 10.0, sample_every: 100, ..Default::default() }).unwrap();
    let e0 = tr.energy[0];
    let drift = tr.energy.iter().fold(0.0f64, |m, e| m.max((e - e0).abs())) / e0;
    ok &= drift <= 1e-8;
    msg.push(format!("conservative drift={drift:.2e}"));
    (ok, msg.join("; "))
}

fn frictional_params() -> IsotropicParams {
    params_1d(IsotropicParams { friction: 0.5, ..section3() })
}

/// Backward Euler: the midpoint rule barely damps modes with `ω Δt ≫ 1`, which leaves
/// an artificial slow tail on fine grids.
fn frictional_run(n: usize) -> EnergyTrace {
    let sys = system(&frictional_params(), n, Variant::Frictional, None);
    let x0 = initial_state(&sys, &InitialData::Mode { n: 1, amplitude: 1.0 }).unwrap();
    let cfg = SimConfig {
        dt: 0.02,
        scheme: Scheme::BackwardEuler,
        t_final: 20.0,
        sample_every: 5,
        ..Default::default()
    };
    simulate(&sys, &x0, &cfg).unwrap()
}

fn frictional_decay() -> (Outcome, f64) {
    let mut ok = true;
    let mut msg = Vec::new();
    let mut rates = Vec::new();
    let mut decades = 0.0;
    for n in [50, 100, 200] {
        let tr = frictional_run(n);
        match fit_decay(&tr.times, &tr.energy) {
            Ok(f) => {
                ok &= f.c0 > 0.0 && f.is_exponential() && f.bound_holds();
                msg.push(format!("n={n}: c0={:.4} C={:.3} r2={:.4} bound={:.3} decades={:.2}", f.c0, f.c, f.r2, f.worst_bound_ratio, f.decades));
                rates.push(f.c0);
                decades = f.decades;
            }
            Err(e) => {
                ok = false;
                msg.push(format!("n={n}: {e}"));
                rates.push(f64::NAN);
            }
        }
    }
    let spread = (rates[2] - rates[1]).abs() / rates[2];
    ok &= spread < 0.2;
    msg.push(format!("finest-grid spread={spread:.3}"));
    ((ok, msg.join("; ")), decades)
}

fn lack_of_decay(damped_decades: f64) -> Outcome {
    let p = IsotropicParams { delta: 0.0, ..section3() };
    let sys = system(&p, 48, Variant::KelvinVoigt, None);
    let x0 = initial_state(&sys, &InitialData::Mode { n: 4, amplitude: 1.0 }).unwrap();
    let cfg = SimConfig { dt: 0.02, t_final: 10.0, sample_every: 10, ..Default::default() };
    let tr = simulate(&sys, &x0, &cfg).unwrap();
    let e0 = tr.energy[0];
    let drift = tr.energy.iter().fold(0.0f64, |m, e| m.max((e - e0).abs())) / e0;
    (
        drift <= 1e-6 && damped_decades >= 3.0,
        format!("undamped drift={drift:.2e}; damped decades={damped_decades:.2}"),
    )
}

fn cattaneo_system() -> SemiDiscreteSystem {
    let p = params_1d(IsotropicParams { kappa: 0.5, ..section3() });
    system(&p, 40, Variant::Cattaneo, Some(DampingLaw::power_saturated(1.0, 2.0)))
}

fn envelope_dominance() -> Outcome {
    let sys = cattaneo_system();
    let law = sys.law.clone().unwrap();
    let window = 2.0;
    let cfg = SimConfig { dt: 0.02, t_final: 40.0, sample_every: 5, ..Default::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let runs: Vec<EnergyTrace> = (0..25u64)
        .map(|k| {
            let energy = 0.2 + 0.8 * rng.gen::<f64>();
            let x0 = initial_state(&sys, &InitialData::Smooth { seed: 100 + k, modes: 4, amplitude: 1.0, energy: Some(energy) }).unwrap();
            simulate(&sys, &x0, &cfg).unwrap()
        })
        .collect();
    let (fit, held) = runs.split_at(20);
    let est = match estimate_c_lemma(fit, window, Some(1.0)) {
        Ok(e) => e,
        Err(e) => return (false, format!("C_lemma: {e}")),
    };
    let heat = sys.coeffs.m2.get(&[0, 0]);
    let env = match build_envelope(&law, window, sys.grid.domain_measure(), est.c, heat) {
        Ok(e) => e,
        Err(e) => return (false, format!("envelope: {e}")),
    };
    let mut ok = check_majorant(&law).is_ok();
    let mut violations = 0;
    let mut margin = f64::INFINITY;
    for tr in held {
        let cmp = envelope_compare(tr, &env).unwrap();
        violations += cmp.violations;
        margin = margin.min(cmp.min_relative_margin);
    }
    ok &= violations == 0;
    let s0 = 1.0;
    let rec = thermolab_core::envelope::integrate_decay_ode(&|s| env.q(s), s0, 1e12, Some(1e-3 * s0));
    let reached = *rec.values.last().unwrap() < 1e-3 * s0;
    ok &= reached && rec.is_monotone();
    (
        ok,
        format!(
            "C_lemma={:.4e} windows={} violations={violations} min margin={margin:.3e} S monotone={} reached 1e-3 at t={:.3e}",
            est.c,
            est.windows,
            rec.is_monotone(),
            rec.times.last().unwrap()
        ),
    )
}

fn sequence_lemma() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for k in 0..100 {
        let law = if k % 2 == 0 {
            DampingLaw::power_saturated(0.5 + rng.gen::<f64>(), 2.0 + rng.gen::<f64>())
        } else {
            DampingLaw::linear(0.5 + rng.gen::<f64>())
        };
        let env = build_envelope(&law, 0.5 + 2.0 * rng.gen::<f64>(), PI, 0.5 + 10.0 * rng.gen::<f64>(), 1.0).unwrap();
        let mut seq = vec![0.1 + rng.gen::<f64>()];
        for _ in 0..50 {
            let last = *seq.last().unwrap();
            let slack = if rng.gen::<f64>() < 0.3 { 1.0 } else { rng.gen::<f64>() };
            seq.push(slack * env.inv_i_plus_p(last));
        }
        match check_sequence_lemma(&env, &seq) {
            Ok(r) => {
                worst = worst.max(r.max_ratio);
                ok &= r.holds;
            }
            Err(e) => return (false, format!("sequence {k}: {e}")),
        }
    }
    (ok, format!("100 sequences, max s_m/S(m)={worst:.12}"))
}

fn observability_chain() -> Outcome {
    let mut ok = true;
    let mut worst = [0.0f64, f64::INFINITY, 0.0, 0.0];
    let mut sizes = Vec::new();
    let mut check = |pair: &AbstractPair, seed: u64, label: String, sizes: &mut Vec<String>| -> bool {
        match verify_theorem_a(pair, 128, seed, None) {
            Ok(r) => {
                worst[0] = worst[0].max(r.energy_identity);
                worst[1] = worst[1].min(r.dissipation_ratio);
                worst[2] = worst[2].max(r.comparison_ratio);
                worst[3] = worst[3].max(r.observability_ratio);
                sizes.push(format!("{label}:T0={:.2}", r.t0));
                r.passed() && r.trials >= 100
            }
            Err(e) => {
                sizes.push(format!("{label}: {e}"));
                false
            }
        }
    };
    for k in 0..20u64 {
        let n = 10 + (k as usize * 19) % 191;
        let rank = if k % 3 == 0 { n } else { (n / 2).max(1) };
        let pair = AbstractPair::random(n, rank, 500 + k);
        ok &= check(&pair, k, format!("N{n}"), &mut sizes);
    }
    let p = params_1d(IsotropicParams { kelvin_voigt: 0.5, ..section3() });
    let sys = system(&p, 30, Variant::KelvinVoigt, None);
    match from_discretization(&sys).and_then(|pair| pair.truncate_modes(24)) {
        Ok(pair) => ok &= check(&pair, 99, format!("thermoelastic{}", pair.dim()), &mut sizes),
        Err(e) => {
            ok = false;
            sizes.push(format!("thermoelastic: {e}"));
        }
    }
    (
        ok,
        format!(
            "energy identity={:.2e} min dissipation ratio={:.3} max comparison ratio={:.3} max observability ratio={:.3} [{}]",
            worst[0],
            worst[1],
            worst[2],
            worst[3],
            sizes.join(" ")
        ),
    )
}

fn static_recovery(sys: &SemiDiscreteSystem, seed: u64) -> f64 {
    let x = initial_state(sys, &InitialData::Smooth { seed, modes: 5, amplitude: 1.0, energy: None }).unwrap();
    let f = StateVector { layout: x.layout, data: apply_generator(sys, &x.data) };
    let sol = static_solve(sys, &f).unwrap();
    let err = sol.state.data.iter().zip(&x.data).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let scale = x.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    err / scale
}

fn continuum_error(n: usize) -> (f64, f64) {
    let p = params_1d(IsotropicParams { kelvin_voigt: 0.5, friction: 0.3, ..section3() });
    let sys = system(&p, n, Variant::KelvinVoigt, None);
    let ms = Manufactured1d::standard();
    let l = sys.layout;
    let mut exact = sys.zero_state();
    let mut f = sys.zero_state();
    for k in 0..l.nodes {
        let (x, _) = sys.grid.coords(k);
        let s = ms.state(x);
        let g = ms.generator(&sys.coeffs, x);
        for (field, range) in [l.u(0), l.tau(), l.v(0), l.theta()].into_iter().enumerate() {
            exact.data[range.start + k] = s[field];
            f.data[range.start + k] = g[field];
        }
    }
    let sol = static_solve(&sys, &f).unwrap();
    let err = sol.state.data.iter().zip(&exact.data).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let scale = exact.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    (sys.grid.h(0), err / scale)
}

fn static_solve_check() -> Outcome {
    let p1 = params_1d(IsotropicParams { kelvin_voigt: 0.5, ..section3() });
    let e1 = static_recovery(&system(&p1, 200, Variant::KelvinVoigt, None), 1);
    let p2 = IsotropicParams { kelvin_voigt: 0.5, ..section3() };
    let e2 = static_recovery(&system(&p2, 32, Variant::KelvinVoigt, None), 2);
    let errs: Vec<(f64, f64)> = [25, 50, 100].into_iter().map(continuum_error).collect();
    let rate = log_slope(&errs);
    let ok = e1 <= 1e-8 && e2 <= 1e-8 && rate >= 1.8;
    (
        ok,
        format!(
            "recovery 1D={e1:.2e} 2D={e2:.2e}; continuum errors {:.2e},{:.2e},{:.2e} rate={rate:.3}",
            errs[0].1, errs[1].1, errs[2].1
        ),
    )
}

fn report(label: &str, start: Instant, (ok, detail): Outcome, all: &mut bool) {
    *all &= ok;
    println!(
        "{} {label}: {detail} ({:.1}s)",
        if ok { "PASS" } else { "FAIL" },
        start.elapsed().as_secs_f64()
    );
}

fn main() {
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let want = |k: &str| filter.is_empty() || filter.iter().any(|f| k.contains(f.as_str()));
    let mut all = true;
    if want("c1") {
        report("c1 counterexample", Instant::now(), counterexample(), &mut all);
    }
    if want("c2") {
        report("c2 boundary conditions", Instant::now(), boundary_conditions(), &mut all);
    }
    if want("c3") {
        report("c3 energy identities", Instant::now(), energy_identities(), &mut all);
    }
    let mut decades = f64::NAN;
    if want("c4") || want("c5") {
        let t = Instant::now();
        let (out, d) = frictional_decay();
        decades = d;
        report("c4 frictional decay", t, out, &mut all);
    }
    if want("c5") {
        report("c5 lack of decay", Instant::now(), lack_of_decay(decades), &mut all);
    }
    if want("c6") {
        report("c6 envelope dominance", Instant::now(), envelope_dominance(), &mut all);
    }
    if want("c7") {
        report("c7 sequence lemma", Instant::now(), sequence_lemma(), &mut all);
    }
    if want("c8") {
        report("c8 observability chain", Instant::now(), observability_chain(), &mut all);
    }
    if want("c9") {
        report("c9 static solve", Instant::now(), static_solve_check(), &mut all);
    }
    if !all {
        std::process::exit(1);
    }
}
