//! Observability of damped skew systems `U̇ + 𝔄U + 𝔅U = 0` (𝔄 skew, 𝔅 ≥ 0).

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::discretization::SemiDiscreteSystem;
use crate::error::{LabError, Result};

/// Largest pair dimension accepted.
pub const PAIR_CAP: usize = 2000;

#[derive(Clone, Debug, PartialEq)]
pub struct AbstractPair {
    pub a_gen: DMatrix<f64>,
    pub b_obs: DMatrix<f64>,
}

impl AbstractPair {
    pub fn new(a_gen: DMatrix<f64>, b_obs: DMatrix<f64>) -> Result<Self> {
        let n = a_gen.nrows();
        if a_gen.ncols() != n || b_obs.shape() != (n, n) {
            return Err(LabError::InvalidInput("pair matrices must be square and of equal size".into()));
        }
        if n > PAIR_CAP {
            return Err(LabError::SizeCapExceeded { size: n, cap: PAIR_CAP });
        }
        let scale = a_gen.norm().max(1.0);
        let skew = (&a_gen + a_gen.transpose()).norm() / scale;
        if skew > 1e-10 {
            return Err(LabError::NotSkewInEnergyCoords { residual: skew });
        }
        let bs = b_obs.norm().max(1.0);
        if (&b_obs - b_obs.transpose()).norm() > 1e-10 * bs {
            return Err(LabError::InvalidInput("observation operator is not symmetric".into()));
        }
        let min = SymmetricEigen::new(b_obs.clone()).eigenvalues.min();
        if min < -1e-10 * bs {
            return Err(LabError::InvalidInput(format!(
                "observation operator is not positive semidefinite (min eig {min:e})"
            )));
        }
        Ok(AbstractPair { a_gen, b_obs })
    }

    pub fn dim(&self) -> usize {
        self.a_gen.nrows()
    }

    /// Random skew generator with a positive semidefinite damping of the given rank.
    pub fn random(n: usize, rank: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = |rng: &mut ChaCha8Rng| rng.gen::<f64>() * 2.0 - 1.0;
        let g = DMatrix::from_fn(n, n, |_, _| u(&mut rng));
        let a = (&g - g.transpose()) * (1.0 / (n as f64).sqrt());
        let p = DMatrix::from_fn(rank.max(1), n, |_, _| u(&mut rng));
        let mut b = p.transpose() * &p;
        let nb = SymmetricEigen::new(b.clone()).eigenvalues.max();
        b *= 1.0 / nb.max(f64::MIN_POSITIVE);
        b = (&b + b.transpose()) * 0.5;
        AbstractPair { a_gen: a, b_obs: b }
    }

    /// Restriction to the `k` lowest-frequency invariant modes of `𝔄`.
    pub fn truncate_modes(&self, k: usize) -> Result<AbstractPair> {
        let n = self.dim();
        if k == 0 || k > n {
            return Err(LabError::InvalidInput(format!("cannot keep {k} of {n} modes")));
        }
        let sq = self.a_gen.transpose() * &self.a_gen;
        let eig = SymmetricEigen::new((&sq + sq.transpose()) * 0.5);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let mut keep = k;
        let tol = 1e-8 * eig.eigenvalues.max().abs().max(1.0);
        while keep < n && (eig.eigenvalues[order[keep]] - eig.eigenvalues[order[keep - 1]]).abs() <= tol {
            keep += 1;
        }
        let q = DMatrix::from_fn(n, keep, |r, c| eig.eigenvectors[(r, order[c])]);
        let a = q.transpose() * &self.a_gen * &q;
        let b = q.transpose() * &self.b_obs * &q;
        let a = (&a - a.transpose()) * 0.5;
        let b = (&b + b.transpose()) * 0.5;
        AbstractPair::new(a, b)
    }
}

/// Energy coordinates `y = Lᵀx` with `M = L Lᵀ`: `𝔄 = −L⁻¹ J L⁻ᵀ`, `𝔅 = L⁻¹ R L⁻ᵀ`.
pub fn from_discretization(sys: &SemiDiscreteSystem) -> Result<AbstractPair> {
    if sys.has_nonlinear_damping() {
        return Err(LabError::InvalidInput("pair needs linear damping".into()));
    }
    let n = sys.layout.len();
    if n > PAIR_CAP {
        return Err(LabError::SizeCapExceeded { size: n, cap: PAIR_CAP });
    }
    let (j, r, m) = sys.full_blocks();
    let chol = Cholesky::new(m.to_dense())
        .ok_or_else(|| LabError::SolveFailure("energy matrix is not positive definite".into()))?;
    let l = chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| LabError::SolveFailure("Cholesky factor not invertible".into()))?;
    let a = -(&linv * j.to_dense() * linv.transpose());
    let b = &linv * r.to_dense() * linv.transpose();
    let scale = a.norm().max(1.0);
    let residual = (&a + a.transpose()).norm() / scale;
    if residual > 1e-10 {
        return Err(LabError::NotSkewInEnergyCoords { residual });
    }
    let a = (&a - a.transpose()) * 0.5;
    let b = (&b + b.transpose()) * 0.5;
    AbstractPair::new(a, b)
}

/// Midpoint (Cayley) propagators of the damped and the free dynamics.
#[derive(Clone, Debug)]
pub struct Propagators {
    pub dt: f64,
    pub damped: DMatrix<f64>,
    pub free: DMatrix<f64>,
}

impl Propagators {
    pub fn new(pair: &AbstractPair, dt: f64) -> Result<Self> {
        let n = pair.dim();
        let id = DMatrix::<f64>::identity(n, n);
        let cayley = |g: &DMatrix<f64>| -> Result<DMatrix<f64>> {
            let lhs = &id + g * (0.5 * dt);
            let rhs = &id - g * (0.5 * dt);
            lhs.lu()
                .solve(&rhs)
                .ok_or_else(|| LabError::SolveFailure("propagator solve failed".into()))
        };
        Ok(Propagators {
            dt,
            damped: cayley(&(&pair.a_gen + &pair.b_obs))?,
            free: cayley(&pair.a_gen)?,
        })
    }
}

fn spectral_norm_sq(m: &DMatrix<f64>) -> f64 {
    let s = m.clone().singular_values();
    let v = s.max();
    v * v
}

fn spectral_abscissa(m: &DMatrix<f64>) -> f64 {
    m.complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Default step for a pair: small against the operator norm.
pub fn default_dt(pair: &AbstractPair) -> f64 {
    let g = &pair.a_gen + &pair.b_obs;
    let norm = g.clone().singular_values().max();
    (0.05 / norm.max(1e-12)).min(1e-2)
}

/// Smallest `T₀ = kΔt` with `E_U(T₀) ≤ ½ E_U(0)` for every initial state.
pub fn find_t0(pair: &AbstractPair, dt: f64, max_steps: usize) -> Result<(f64, usize)> {
    let abscissa = spectral_abscissa(&-(&pair.a_gen + &pair.b_obs));
    if !(abscissa < -1e-12) {
        return Err(LabError::NotExponentiallyStable { abscissa });
    }
    let prop = Propagators::new(pair, dt)?;
    let r = &prop.damped;
    let mut powers = vec![r.clone()];
    let mut k = 1usize;
    while spectral_norm_sq(powers.last().unwrap()) > 0.5 {
        if k >= max_steps {
            return Err(LabError::NotExponentiallyStable { abscissa });
        }
        let p = powers.last().unwrap();
        powers.push(p * p);
        k *= 2;
    }
    let power = |steps: usize| -> DMatrix<f64> {
        let n = pair.dim();
        let mut acc = DMatrix::<f64>::identity(n, n);
        for (bit, p) in powers.iter().enumerate() {
            if steps >> bit & 1 == 1 {
                acc = p * acc;
            }
        }
        acc
    };
    let (mut lo, mut hi) = (k / 2, k);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if spectral_norm_sq(&power(mid)) <= 0.5 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((hi as f64 * dt, hi))
}

/// Accumulated Gramian `Σ Δt Φ_midᵀ 𝔅 Φ_mid` of the free dynamics over `steps` steps.
pub fn free_gramian(pair: &AbstractPair, prop: &Propagators, steps: usize) -> DMatrix<f64> {
    let n = pair.dim();
    let mut phi = DMatrix::<f64>::identity(n, n);
    let mut g = DMatrix::<f64>::zeros(n, n);
    for _ in 0..steps {
        let next = &prop.free * &phi;
        let mid = (&phi + &next) * 0.5;
        let bm = &pair.b_obs * &mid;
        g += mid.transpose() * bm * prop.dt;
        phi = next;
    }
    (&g + g.transpose()) * 0.5
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObservabilityEstimate {
    /// Largest `E_φ(0) / ∫⟨𝔅φ, φ⟩` found.
    pub c: f64,
    pub min_gramian_eig: f64,
    pub horizon: f64,
}

/// Estimates the observability constant at time `horizon` from random unit-energy
/// states and the eigenvectors of the free Gramian.
pub fn observability_constant(
    pair: &AbstractPair,
    horizon: f64,
    dt: f64,
    trials: usize,
    seed: u64,
) -> Result<ObservabilityEstimate> {
    let steps = (horizon / dt).round().max(1.0) as usize;
    let prop = Propagators::new(pair, dt)?;
    let g = free_gramian(pair, &prop, steps);
    let n = pair.dim();
    let eig = SymmetricEigen::new(g.clone());
    let min_eig = eig.eigenvalues.min();
    let max_eig = eig.eigenvalues.max().max(f64::MIN_POSITIVE);
    let observable = min_eig > 1e-12 * max_eig;
    if !observable {
        return Err(LabError::NotObservableAtT {
            t: steps as f64 * dt,
            min_eig,
        });
    }
    let ratio = |x: &[f64]| -> f64 {
        let v = nalgebra::DVector::from_column_slice(x);
        let num = 0.5 * v.dot(&v);
        let den = v.dot(&(&g * &v));
        if den > 0.0 {
            num / den
        } else {
            f64::INFINITY
        }
    };
    let mut c: f64 = 0.0;
    for col in 0..n {
        c = c.max(ratio(eig.eigenvectors.column(col).as_slice()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..trials {
        let x: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
        c = c.max(ratio(&x));
    }
    Ok(ObservabilityEstimate {
        c,
        min_gramian_eig: min_eig,
        horizon: steps as f64 * dt,
    })
}

/// Energies and observation integrals of a batch of trajectories.
#[derive(Clone, Debug)]
pub struct PairBatch {
    pub e_u0: Vec<f64>,
    pub e_u_end: Vec<f64>,
    pub int_bu: Vec<f64>,
    pub int_bphi: Vec<f64>,
    pub int_bpsi: Vec<f64>,
}

/// Runs damped `U` and free `φ` from the same initial states (columns of `x0`).
pub fn simulate_pair_batch(pair: &AbstractPair, prop: &Propagators, x0: &DMatrix<f64>, steps: usize) -> PairBatch {
    let k = x0.ncols();
    let mut u = x0.clone();
    let mut phi = x0.clone();
    let mut int_bu = vec![0.0; k];
    let mut int_bphi = vec![0.0; k];
    let mut int_bpsi = vec![0.0; k];
    let quad = |m: &DMatrix<f64>, acc: &mut [f64]| {
        let bm = &pair.b_obs * m;
        for c in 0..k {
            acc[c] += prop.dt * m.column(c).dot(&bm.column(c));
        }
    };
    for _ in 0..steps {
        let un = &prop.damped * &u;
        let pn = &prop.free * &phi;
        let um = (&u + &un) * 0.5;
        let pm = (&phi + &pn) * 0.5;
        let psim = &pm - &um;
        quad(&um, &mut int_bu);
        quad(&pm, &mut int_bphi);
        quad(&psim, &mut int_bpsi);
        u = un;
        phi = pn;
    }
    let energy = |m: &DMatrix<f64>| -> Vec<f64> {
        (0..k).map(|c| 0.5 * m.column(c).norm_squared()).collect()
    };
    PairBatch {
        e_u0: energy(x0),
        e_u_end: energy(&u),
        int_bu,
        int_bphi,
        int_bpsi,
    }
}

/// Energies and running observation integrals of one damped and one free trajectory.
#[derive(Clone, Debug, Default)]
pub struct PairTrace {
    pub times: Vec<f64>,
    pub e_u: Vec<f64>,
    pub e_phi: Vec<f64>,
    pub int_bu: Vec<f64>,
    pub int_bphi: Vec<f64>,
}

pub fn simulate_pair(pair: &AbstractPair, u0: &[f64], horizon: f64, dt: f64) -> Result<PairTrace> {
    let n = pair.dim();
    if u0.len() != n {
        return Err(LabError::InvalidInput(format!("initial state has length {}, expected {n}", u0.len())));
    }
    if !(dt > 0.0 && horizon >= 0.0) {
        return Err(LabError::InvalidInput("need dt > 0 and a nonnegative horizon".into()));
    }
    let prop = Propagators::new(pair, dt)?;
    let steps = (horizon / dt).round() as usize;
    let mut u = nalgebra::DVector::from_column_slice(u0);
    let mut phi = u.clone();
    let mut tr = PairTrace::default();
    let (mut ibu, mut ibp) = (0.0, 0.0);
    let push = |tr: &mut PairTrace, t: f64, u: &nalgebra::DVector<f64>, p: &nalgebra::DVector<f64>, a: f64, b: f64| {
        tr.times.push(t);
        tr.e_u.push(0.5 * u.norm_squared());
        tr.e_phi.push(0.5 * p.norm_squared());
        tr.int_bu.push(a);
        tr.int_bphi.push(b);
    };
    push(&mut tr, 0.0, &u, &phi, 0.0, 0.0);
    for s in 1..=steps {
        let un = &prop.damped * &u;
        let pn = &prop.free * &phi;
        let um = (&u + &un) * 0.5;
        let pm = (&phi + &pn) * 0.5;
        ibu += dt * um.dot(&(&pair.b_obs * &um));
        ibp += dt * pm.dot(&(&pair.b_obs * &pm));
        u = un;
        phi = pn;
        push(&mut tr, s as f64 * dt, &u, &phi, ibu, ibp);
    }
    Ok(tr)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TheoremReport {
    pub dim: usize,
    pub abscissa: f64,
    pub t0: f64,
    pub dt: f64,
    pub trials: usize,
    /// Largest `|E_U(0) − E_U(T₀) − ∫⟨𝔅U,U⟩| / E_U(0)`.
    pub energy_identity: f64,
    /// Smallest `∫⟨𝔅U,U⟩ / (½ E_U(0))`; must be ≥ 1.
    pub dissipation_ratio: f64,
    /// Largest `∫⟨𝔅ψ,ψ⟩ / ∫⟨𝔅φ,φ⟩`; must be ≤ 1.
    pub comparison_ratio: f64,
    /// Largest `½ E_φ(0) / (8 ∫⟨𝔅φ,φ⟩)`; must be ≤ 1.
    pub observability_ratio: f64,
    /// Observability constant at `T₀` from the Gramian.
    pub c_obs: f64,
}

impl TheoremReport {
    pub fn passed(&self) -> bool {
        self.energy_identity <= 1e-6
            && self.dissipation_ratio >= 1.0 - 1e-9
            && self.comparison_ratio <= 1.0 + 1e-9
            && self.observability_ratio <= 1.0 + 1e-9
    }

    pub fn records(&self) -> Vec<(String, String)> {
        let f = crate::io::fmt_f64;
        vec![
            ("dim".into(), self.dim.to_string()),
            ("abscissa".into(), f(self.abscissa)),
            ("T0".into(), f(self.t0)),
            ("dt".into(), f(self.dt)),
            ("trials".into(), self.trials.to_string()),
            ("energy_identity".into(), f(self.energy_identity)),
            ("dissipation_ratio".into(), f(self.dissipation_ratio)),
            ("comparison_ratio".into(), f(self.comparison_ratio)),
            ("observability_ratio".into(), f(self.observability_ratio)),
            ("C_obs".into(), f(self.c_obs)),
            ("passed".into(), self.passed().to_string()),
        ]
    }
}

/// Checks the inequality chain of the exponential-stability ⇒ observability argument
/// on random unit-energy initial states.
pub fn verify_theorem_a(pair: &AbstractPair, trials: usize, seed: u64, dt: Option<f64>) -> Result<TheoremReport> {
    let n = pair.dim();
    let dt = dt.unwrap_or_else(|| default_dt(pair));
    let abscissa = spectral_abscissa(&-(&pair.a_gen + &pair.b_obs));
    let (t0, steps) = find_t0(pair, dt, 1 << 22)?;
    let prop = Propagators::new(pair, dt)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x0 = DMatrix::from_fn(n, trials.max(1), |_, _| rng.gen::<f64>() * 2.0 - 1.0);
    for mut c in x0.column_iter_mut() {
        let e = 0.5 * c.norm_squared();
        c /= e.sqrt();
    }
    let chunk = 32;
    let cols: Vec<usize> = (0..x0.ncols()).step_by(chunk).collect();
    let batches: Vec<PairBatch> = cols
        .par_iter()
        .map(|&c0| {
            let w = chunk.min(x0.ncols() - c0);
            let block = x0.columns(c0, w).into_owned();
            simulate_pair_batch(pair, &prop, &block, steps)
        })
        .collect();
    let mut rep = TheoremReport {
        dim: n,
        abscissa,
        t0,
        dt,
        trials: x0.ncols(),
        energy_identity: 0.0,
        dissipation_ratio: f64::INFINITY,
        comparison_ratio: 0.0,
        observability_ratio: 0.0,
        c_obs: 0.0,
    };
    for b in &batches {
        for k in 0..b.e_u0.len() {
            let e0 = b.e_u0[k];
            rep.energy_identity = rep
                .energy_identity
                .max((e0 - b.e_u_end[k] - b.int_bu[k]).abs() / e0);
            rep.dissipation_ratio = rep.dissipation_ratio.min(b.int_bu[k] / (0.5 * e0));
            rep.comparison_ratio = rep.comparison_ratio.max(b.int_bpsi[k] / b.int_bphi[k]);
            rep.observability_ratio = rep.observability_ratio.max(0.5 * e0 / (8.0 * b.int_bphi[k]));
        }
    }
    let g = free_gramian(pair, &prop, steps);
    let min = SymmetricEigen::new(g).eigenvalues.min();
    rep.c_obs = if min > 0.0 { 0.5 / min } else { f64::INFINITY };
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_damping_constant() {
        let pair = AbstractPair::new(DMatrix::zeros(3, 3), DMatrix::identity(3, 3)).unwrap();
        let est = observability_constant(&pair, 2.0, 1e-3, 10, 1).unwrap();
        assert!((est.c - 0.25).abs() < 1e-9, "{est:?}");
    }

    #[test]
    fn rotation_half_life() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let pair = AbstractPair::new(a, DMatrix::identity(2, 2)).unwrap();
        let dt = 1e-4;
        let (t0, _) = find_t0(&pair, dt, 1 << 24).unwrap();
        assert!((t0 - 2f64.ln() / 2.0).abs() <= dt, "{t0}");
    }

    #[test]
    fn undamped_pair_rejected() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let pair = AbstractPair::new(a, DMatrix::zeros(2, 2)).unwrap();
        assert!(matches!(
            verify_theorem_a(&pair, 4, 0, Some(1e-2)),
            Err(LabError::NotExponentiallyStable { .. })
        ));
    }

    #[test]
    fn unobserved_block_detected() {
        let mut a = DMatrix::zeros(3, 3);
        a[(0, 1)] = 1.0;
        a[(1, 0)] = -1.0;
        let mut b = DMatrix::zeros(3, 3);
        b[(0, 0)] = 1.0;
        let pair = AbstractPair::new(a, b).unwrap();
        assert!(matches!(
            observability_constant(&pair, 5.0, 1e-2, 10, 3),
            Err(LabError::NotObservableAtT { .. })
        ));
    }

    #[test]
    fn pair_trace_balances() {
        let pair = AbstractPair::random(12, 4, 9);
        let u0: Vec<f64> = (0..12).map(|k| (k as f64).cos()).collect();
        let tr = simulate_pair(&pair, &u0, 3.0, 1e-2).unwrap();
        let e0 = tr.e_u[0];
        for k in 0..tr.times.len() {
            assert!((tr.e_phi[k] - e0).abs() <= 1e-10 * e0);
            assert!((e0 - tr.e_u[k] - tr.int_bu[k]).abs() <= 1e-10 * e0);
        }
    }

    #[test]
    fn non_skew_rejected() {
        let a = DMatrix::identity(2, 2);
        assert!(AbstractPair::new(a, DMatrix::identity(2, 2)).is_err());
    }
}
