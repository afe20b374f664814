use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::step::{Scheme, Stepper};
use crate::discretization::{BandedLu, SemiDiscreteSystem, StateVector, Triplets};
use crate::error::{LabError, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum InitialData {
    Zero,
    /// `u_1 = amplitude · sin²(n x) [· sin²(n y)]`, everything else zero.
    Mode { n: u32, amplitude: f64 },
    /// Random smooth fields from a seed, optionally rescaled to a given energy.
    Smooth {
        seed: u64,
        modes: usize,
        amplitude: f64,
        energy: Option<f64>,
    },
    State(StateVector),
}

impl InitialData {
    /// Parses `zero`, `mode:N[:AMP]`, `smooth:SEED[:AMP]`.
    pub fn parse(spec: &str) -> Result<Self> {
        let parts: Vec<&str> = spec.split(':').collect();
        let bad = || LabError::InvalidInput(format!("bad initial-data spec `{spec}`"));
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
        match parts.as_slice() {
            ["zero"] => Ok(InitialData::Zero),
            ["mode", n] => Ok(InitialData::Mode {
                n: n.parse().map_err(|_| bad())?,
                amplitude: 1.0,
            }),
            ["mode", n, a] => Ok(InitialData::Mode {
                n: n.parse().map_err(|_| bad())?,
                amplitude: num(a)?,
            }),
            ["smooth", s] => Ok(InitialData::Smooth {
                seed: s.parse().map_err(|_| bad())?,
                modes: 4,
                amplitude: 1.0,
                energy: None,
            }),
            ["smooth", s, a] => Ok(InitialData::Smooth {
                seed: s.parse().map_err(|_| bad())?,
                modes: 4,
                amplitude: num(a)?,
                energy: None,
            }),
            _ => Err(bad()),
        }
    }
}

pub fn initial_state(sys: &SemiDiscreteSystem, init: &InitialData) -> Result<StateVector> {
    let l = sys.layout;
    let g = &sys.grid;
    let mut x = sys.zero_state();
    match init {
        InitialData::Zero => {}
        InitialData::Mode { n, amplitude } => {
            let nf = *n as f64;
            for k in 0..l.nodes {
                let (px, py) = g.coords(k);
                let mut v = amplitude * (nf * px).sin().powi(2);
                if g.dim == 2 {
                    v *= (nf * py).sin().powi(2);
                }
                x.data[l.u(0).start + k] = v;
            }
        }
        InitialData::Smooth {
            seed,
            modes,
            amplitude,
            energy,
        } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let m = (*modes).max(1);
            let ny_modes = if g.dim == 2 { m } else { 1 };
            let coef = |rng: &mut ChaCha8Rng| -> Vec<f64> {
                (0..m * ny_modes)
                    .map(|idx| {
                        let (a, b) = (idx % m + 1, idx / m + 1);
                        (rng.gen::<f64>() * 2.0 - 1.0) / ((a * b) as f64).powi(2)
                    })
                    .collect()
            };
            // clamped fields: sin(kx) sin(x); Dirichlet fields: sin(kx)
            let eval = |c: &[f64], clamped: bool, px: f64, py: f64| -> f64 {
                let mut s = 0.0;
                for (idx, ck) in c.iter().enumerate() {
                    let (a, b) = ((idx % m + 1) as f64, (idx / m + 1) as f64);
                    let mut t = (a * px).sin();
                    if clamped {
                        t *= px.sin();
                    }
                    if g.dim == 2 {
                        t *= (b * py).sin();
                        if clamped {
                            t *= py.sin();
                        }
                    }
                    s += ck * t;
                }
                s
            };
            let mut fields: Vec<(std::ops::Range<usize>, bool)> = Vec::new();
            for i in 0..l.dim {
                fields.push((l.u(i), true));
            }
            fields.push((l.tau(), false));
            for i in 0..l.dim {
                fields.push((l.v(i), true));
            }
            fields.push((l.theta(), false));
            for (range, clamped) in fields {
                let c = coef(&mut rng);
                for k in 0..l.nodes {
                    let (px, py) = g.coords(k);
                    x.data[range.start + k] = amplitude * eval(&c, clamped, px, py);
                }
            }
            if let Some(target) = energy {
                let e = sys.energy(&x.data);
                if !(e > 0.0) {
                    return Err(LabError::DegenerateRun("initial energy is zero".into()));
                }
                let s = (target / e).sqrt();
                x.data.iter_mut().for_each(|v| *v *= s);
            }
        }
        InitialData::State(s) => {
            if s.layout != l {
                return Err(LabError::InvalidInput(format!(
                    "state layout {:?} does not match system layout {:?}",
                    s.layout, l
                )));
            }
            x = s.clone();
        }
    }
    Ok(x)
}

#[derive(Clone, Debug)]
pub struct SimConfig {
    pub dt: f64,
    pub t_final: f64,
    pub scheme: Scheme,
    /// Record every `sample_every` steps (the final step is always recorded).
    pub sample_every: usize,
    /// Multiplier `N` of the Lyapunov functional; `None` skips it.
    pub lyapunov_n: Option<f64>,
    pub fp_tol: f64,
    pub fp_max_iter: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt: 1e-2,
            t_final: 1.0,
            scheme: Scheme::Midpoint,
            sample_every: 1,
            lyapunov_n: None,
            fp_tol: 1e-10,
            fp_max_iter: 50,
        }
    }
}

#[derive(Clone, Debug)]
pub struct EnergyTrace {
    pub variant: String,
    pub times: Vec<f64>,
    pub energy: Vec<f64>,
    pub dissipation: Vec<f64>,
    pub lyapunov: Option<Vec<f64>>,
    /// Cumulative `∫₀ᵗ ∫ (E(|v|)²|v|² + |v|² + |q|²)` with θ-point quadrature.
    pub observed: Vec<f64>,
    /// Cumulative `∫₀ᵗ D` with θ-point quadrature.
    pub dissipated: Vec<f64>,
    /// Largest per-step `|E_{n+1} − E_n + Δt (D_n + D_{n+1}) / 2|`.
    pub balance_trapezoid: f64,
    /// Largest per-step `|E_{n+1} − E_n + Δt D(x_θ)|`.
    pub balance_theta: f64,
    pub max_iterations: usize,
    pub final_state: Vec<f64>,
}

impl EnergyTrace {
    pub fn empty(variant: &str) -> Self {
        EnergyTrace {
            variant: variant.to_string(),
            times: vec![],
            energy: vec![],
            dissipation: vec![],
            lyapunov: None,
            observed: vec![],
            dissipated: vec![],
            balance_trapezoid: 0.0,
            balance_theta: 0.0,
            max_iterations: 0,
            final_state: vec![],
        }
    }
}

/// Lyapunov functional `ρ⟨v,u⟩ + a⟨θ,τ⟩ + N E`.
pub fn lyapunov(sys: &SemiDiscreteSystem, x: &[f64], n: f64) -> f64 {
    let l = sys.layout;
    let w = sys.weight();
    let mut cross = 0.0;
    for i in 0..l.dim {
        cross += sys.coeffs.rho * w * crate::numerics::dot(&x[l.u(i)], &x[l.v(i)]);
    }
    cross += sys.coeffs.a * w * crate::numerics::dot(&x[l.tau()], &x[l.theta()]);
    cross + n * sys.energy(x)
}

/// Smallest `C` with `|ρ⟨v,u⟩ + a⟨θ,τ⟩| ≤ C E` for all discrete states.
///
/// Equals `1/√λ` for the smallest generalised eigenvalue of `S x = λ diag(ρw, aw) x`,
/// estimated by inverse iteration and inflated by 1%.
pub fn lyapunov_cross_constant(sys: &SemiDiscreteSystem) -> Result<f64> {
    let l = sys.layout;
    let n = l.npos();
    let mut t = Triplets::new(n, n);
    for (r, c, v) in sys.stiffness.iter() {
        t.push(l.interleave(r), l.interleave(c), v);
    }
    let lu = BandedLu::factor(&t.build())?;
    let mass = sys.vel_mass();
    let mut x: Vec<f64> = (0..n).map(|k| 1.0 + 0.1 * ((k * 7919) % 13) as f64).collect();
    let mut lam = f64::INFINITY;
    for _ in 0..500 {
        let mut b = vec![0.0; n];
        for k in 0..n {
            b[l.interleave(k)] = mass[k] * x[k];
        }
        lu.solve_in_place(&mut b);
        let y: Vec<f64> = (0..n).map(|k| b[l.interleave(k)]).collect();
        let mnorm = y.iter().zip(&mass).map(|(v, m)| m * v * v).sum::<f64>().sqrt();
        x = y.iter().map(|v| v / mnorm).collect();
        let num = sys.stiffness.bilinear(&x, &x);
        let next = num; // x has unit mass norm
        if (next - lam).abs() <= 1e-12 * next.abs() {
            lam = next;
            break;
        }
        lam = next;
    }
    if !(lam > 0.0) {
        return Err(LabError::SolveFailure("stiffness not positive definite".into()));
    }
    Ok(1.01 / lam.sqrt())
}

pub fn simulate(sys: &SemiDiscreteSystem, x0: &StateVector, cfg: &SimConfig) -> Result<EnergyTrace> {
    if x0.layout != sys.layout {
        return Err(LabError::InvalidInput("initial state layout mismatch".into()));
    }
    if !(cfg.t_final >= 0.0) {
        return Err(LabError::InvalidInput("final time must be nonnegative".into()));
    }
    if sys.has_nonlinear_damping() {
        let law = sys.law.as_ref().unwrap();
        let limit = sys.coeffs.rho / (cfg.scheme.theta() * law.lipschitz);
        if cfg.dt >= limit {
            return Err(LabError::InvalidInput(format!(
                "time step {} violates the fixed-point contraction limit {limit}",
                cfg.dt
            )));
        }
    }
    let stepper = Stepper::new(sys, cfg.dt, cfg.scheme, cfg.fp_tol, cfg.fp_max_iter)?;
    let steps = (cfg.t_final / cfg.dt).round() as usize;
    let every = cfg.sample_every.max(1);
    let mut tr = EnergyTrace::empty(sys.variant.name());
    if cfg.lyapunov_n.is_some() {
        tr.lyapunov = Some(Vec::new());
    }
    let mut x = x0.data.clone();
    let mut e = sys.energy(&x);
    let mut d = sys.dissipation(&x);
    let (mut obs, mut dis) = (0.0, 0.0);
    let record = |tr: &mut EnergyTrace, t: f64, x: &[f64], e: f64, d: f64, obs: f64, dis: f64| {
        tr.times.push(t);
        tr.energy.push(e);
        tr.dissipation.push(d);
        tr.observed.push(obs);
        tr.dissipated.push(dis);
        if let (Some(v), Some(n)) = (tr.lyapunov.as_mut(), cfg.lyapunov_n) {
            v.push(lyapunov(sys, x, n));
        }
    };
    record(&mut tr, 0.0, &x, e, d, obs, dis);
    for s in 1..=steps {
        let out = stepper.step(&x)?;
        tr.max_iterations = tr.max_iterations.max(out.iterations);
        let e1 = sys.energy(&out.next);
        let d1 = sys.dissipation(&out.next);
        let dmid = sys.dissipation(&out.theta_state);
        tr.balance_trapezoid = tr
            .balance_trapezoid
            .max((e1 - e + cfg.dt * 0.5 * (d + d1)).abs());
        tr.balance_theta = tr.balance_theta.max((e1 - e + cfg.dt * dmid).abs());
        obs += cfg.dt * sys.observed_density(&out.theta_state);
        dis += cfg.dt * dmid;
        x = out.next;
        e = e1;
        d = d1;
        if !e.is_finite() {
            return Err(LabError::SolveFailure(format!("energy not finite at step {s}")));
        }
        if s % every == 0 || s == steps {
            record(&mut tr, s as f64 * cfg.dt, &x, e, d, obs, dis);
        }
    }
    tr.final_state = x;
    Ok(tr)
}
