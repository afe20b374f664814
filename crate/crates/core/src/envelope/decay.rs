//! Decay envelopes `S' + q(S) = 0` for energies that satisfy the window inequality
//! `p(E((m+1)T)) ≤ E(mT) − E((m+1)T)`.

use super::law::{validate_damping, DampingLaw};
use crate::dynamics::EnergyTrace;
use crate::error::{LabError, Result};
use crate::numerics::bisect_increasing;

#[derive(Clone, Debug)]
pub struct DecayEnvelope {
    pub law: DampingLaw,
    pub window: f64,
    /// `|Q| = |Ω| T`.
    pub q_measure: f64,
    pub c_lemma: f64,
    pub c1: f64,
    pub c2: f64,
    /// Linear coefficient `c₂ / |Q|` of `p`.
    pub c: f64,
    /// Scale `1 / (C |Q|)` inside `p`.
    pub m: f64,
}

impl DecayEnvelope {
    /// `r(s) = h(s / |Q|)`.
    pub fn r(&self, s: f64) -> f64 {
        self.law
            .majorant(s / self.q_measure)
            .expect("majorant checked at construction")
    }

    /// `p(s) = (cI + r)⁻¹(M s)`.
    pub fn p(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        let target = self.m * s;
        bisect_increasing(|x| self.c * x + self.r(x), target, 0.0, target / self.c)
    }

    /// `y = p(x)` for the `x` with `x + p(x) = s`.
    ///
    /// Since `p(x) = y` exactly when `x = (c y + r(y)) / M`, the pair is found by a single
    /// bisection on `y ↦ (c y + r(y)) / M + y`.
    fn split(&self, s: f64) -> (f64, f64) {
        if s <= 0.0 {
            return (0.0, 0.0);
        }
        let y = bisect_increasing(|y| (self.c * y + self.r(y)) / self.m + y, s, 0.0, s);
        (s - y, y)
    }

    /// `(I + p)⁻¹(s)`.
    pub fn inv_i_plus_p(&self, s: f64) -> f64 {
        self.split(s).0
    }

    /// `q(s) = s − (I + p)⁻¹(s) = p((I + p)⁻¹(s))`.
    pub fn q(&self, s: f64) -> f64 {
        self.split(s).1
    }

    pub fn integrate(&self, s0: f64, horizon: f64) -> SRecord {
        integrate_decay_ode(&|s| self.q(s), s0, horizon, None)
    }

    pub fn records(&self) -> Vec<(String, String)> {
        let f = crate::io::fmt_f64;
        vec![
            ("law".into(), self.law.describe()),
            ("window".into(), f(self.window)),
            ("q_measure".into(), f(self.q_measure)),
            ("c_lemma".into(), f(self.c_lemma)),
            ("c1".into(), f(self.c1)),
            ("c2".into(), f(self.c2)),
            ("c".into(), f(self.c)),
            ("M".into(), f(self.m)),
        ]
    }
}

/// Checks `s² + E(s)² s² ≤ h(s² E(s))` and concavity of `h` on a dense sample of `(0, 1]`.
pub fn check_majorant(law: &DampingLaw) -> Result<()> {
    let n = 10_000;
    for k in 1..=n {
        let s = k as f64 / n as f64;
        let e = law.eval(s);
        let z = s * s * e;
        let h = law.majorant(z).ok_or(LabError::InvalidMajorant { s })?;
        let lhs = s * s + e * e * s * s;
        if !(lhs <= h * (1.0 + 1e-12) + 1e-300) {
            return Err(LabError::InvalidMajorant { s });
        }
    }
    let zmax = law.eval(1.0).max(1e-12);
    let hz = |z: f64| law.majorant(z).unwrap_or(f64::NAN);
    for k in 1..n {
        let z = zmax * k as f64 / n as f64;
        let dz = zmax / n as f64;
        let second = hz(z + dz) - 2.0 * hz(z) + hz(z - dz);
        if !(second <= 1e-9 * hz(z).abs().max(1e-300)) || !(hz(z + dz) >= hz(z)) {
            return Err(LabError::InvalidMajorant { s: z });
        }
    }
    Ok(())
}

/// Builds the envelope for a window length, domain measure and window constant.
///
/// `heat_min` is the smallest eigenvalue of the heat tensor; the flux part of the
/// observation is bounded by `1/heat_min` times its dissipation.
pub fn build_envelope(
    law: &DampingLaw,
    window: f64,
    domain_measure: f64,
    c_lemma: f64,
    heat_min: f64,
) -> Result<DecayEnvelope> {
    if !(window > 0.0 && domain_measure > 0.0 && c_lemma > 0.0 && heat_min > 0.0) {
        return Err(LabError::InvalidInput(
            "window, domain measure, window constant and heat tensor must be positive".into(),
        ));
    }
    let v = validate_damping(law);
    if !v.passed() {
        return Err(LabError::InvalidCoefficients(format!(
            "damping law fails checks: {:?}",
            v.failed()
        )));
    }
    check_majorant(law)?;
    let q_measure = domain_measure * window;
    let c1 = law.m_high + 1.0 / law.m_low;
    let c2 = c1.max(1.0).max(1.0 / heat_min);
    Ok(DecayEnvelope {
        law: law.clone(),
        window,
        q_measure,
        c_lemma,
        c1,
        c2,
        c: c2 / q_measure,
        m: 1.0 / (c_lemma * q_measure),
    })
}

/// Solution of `S' = −q(S)` sampled at the integration steps.
#[derive(Clone, Debug)]
pub struct SRecord {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub rates: Vec<f64>,
}

impl SRecord {
    /// Cubic Hermite interpolation between steps; constant beyond the horizon.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.times.len();
        if t <= self.times[0] {
            return self.values[0];
        }
        if t >= self.times[n - 1] {
            return self.values[n - 1];
        }
        let k = self.times.partition_point(|&x| x <= t) - 1;
        let (t0, t1) = (self.times[k], self.times[k + 1]);
        let h = t1 - t0;
        let u = (t - t0) / h;
        let (y0, y1) = (self.values[k], self.values[k + 1]);
        let (d0, d1) = (-self.rates[k] * h, -self.rates[k + 1] * h);
        let u2 = u * u;
        let u3 = u2 * u;
        (2.0 * u3 - 3.0 * u2 + 1.0) * y0
            + (u3 - 2.0 * u2 + u) * d0
            + (-2.0 * u3 + 3.0 * u2) * y1
            + (u3 - u2) * d1
    }

    pub fn is_monotone(&self) -> bool {
        self.values.windows(2).all(|w| w[1] <= w[0])
    }
}

/// Fixed step `1/64` on `[0, 64]`, then steps of `0.05 S / q(S)` (at least `1/64`).
/// `stop_below` ends the integration once `S` drops under the given value.
pub fn integrate_decay_ode(q: &dyn Fn(f64) -> f64, s0: f64, horizon: f64, stop_below: Option<f64>) -> SRecord {
    let base = 1.0 / 64.0;
    let mut t = 0.0;
    let mut s = s0;
    let mut rec = SRecord {
        times: vec![0.0],
        values: vec![s0],
        rates: vec![q(s0)],
    };
    let mut step_index: u64 = 0;
    while t < horizon {
        if stop_below.is_some_and(|b| s < b) {
            break;
        }
        let rate = *rec.rates.last().unwrap();
        let mut h = if t < 64.0 {
            base
        } else if rate > 0.0 {
            (0.05 * s / rate).max(base)
        } else {
            horizon - t
        };
        h = h.min(horizon - t);
        let k1 = -rate;
        let k2 = -q((s + 0.5 * h * k1).max(0.0));
        let k3 = -q((s + 0.5 * h * k2).max(0.0));
        let k4 = -q((s + h * k3).max(0.0));
        s = (s + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)).max(0.0);
        step_index += 1;
        t = if t < 64.0 && h == base {
            step_index as f64 * base
        } else {
            t + h
        };
        rec.times.push(t);
        rec.values.push(s);
        rec.rates.push(q(s));
    }
    rec
}

#[derive(Clone, Debug, PartialEq)]
pub struct LemmaReport {
    /// Largest `s_m / S(m)`.
    pub max_ratio: f64,
    pub holds: bool,
}

/// Verifies the premise `s_{m+1} + p(s_{m+1}) ≤ s_m` and then `s_m ≤ S(m)`.
pub fn check_sequence_lemma(env: &DecayEnvelope, seq: &[f64]) -> Result<LemmaReport> {
    if seq.is_empty() {
        return Err(LabError::InvalidInput("empty sequence".into()));
    }
    for m in 0..seq.len().saturating_sub(1) {
        let lhs = seq[m + 1] + env.p(seq[m + 1]);
        if !(lhs <= seq[m] * (1.0 + 1e-12) + 1e-300) {
            return Err(LabError::PremiseViolated { index: m });
        }
    }
    let horizon = (seq.len() - 1) as f64;
    let rec = env.integrate(seq[0], horizon.max(1.0));
    let mut max_ratio: f64 = 0.0;
    for (m, s) in seq.iter().enumerate() {
        let bound = rec.eval(m as f64);
        if bound > 0.0 {
            max_ratio = max_ratio.max(s / bound);
        } else if *s > 0.0 {
            max_ratio = f64::INFINITY;
        }
    }
    Ok(LemmaReport {
        max_ratio,
        holds: max_ratio <= 1.0 + 1e-9,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct CLemmaEstimate {
    pub c: f64,
    pub runs: usize,
    pub windows: usize,
    /// Largest initial energy among the runs.
    pub k_bound: f64,
}

fn sample_at(tr: &EnergyTrace, t: f64) -> Option<usize> {
    let tol = 1e-9 * t.abs().max(1.0);
    let k = tr.times.partition_point(|&x| x < t - tol);
    (k < tr.times.len() && (tr.times[k] - t).abs() <= tol).then_some(k)
}

/// Largest ratio `E((m+1)T) / ∫_{mT}^{(m+1)T} ∫ (E²|v|² + |v|² + |q|²)` over every
/// complete window of every run.
pub fn estimate_c_lemma(runs: &[EnergyTrace], window: f64, k_bound: Option<f64>) -> Result<CLemmaEstimate> {
    if !(window > 0.0) {
        return Err(LabError::InvalidInput("window must be positive".into()));
    }
    let mut c: f64 = 0.0;
    let mut windows = 0;
    let mut kmax: f64 = 0.0;
    for (r, tr) in runs.iter().enumerate() {
        let e0 = *tr
            .energy
            .first()
            .ok_or_else(|| LabError::DegenerateRun(format!("run {r} is empty")))?;
        if !(e0 > 0.0) {
            return Err(LabError::DegenerateRun(format!("run {r} has zero initial energy")));
        }
        if let Some(k) = k_bound {
            if e0 > k * (1.0 + 1e-12) {
                return Err(LabError::InvalidInput(format!(
                    "run {r} has initial energy {e0:e} above the bound {k:e}"
                )));
            }
        }
        kmax = kmax.max(e0);
        let t_end = *tr.times.last().unwrap();
        let mut m = 0usize;
        while (m + 1) as f64 * window <= t_end * (1.0 + 1e-12) {
            let a = sample_at(tr, m as f64 * window);
            let b = sample_at(tr, (m + 1) as f64 * window);
            let (a, b) = match (a, b) {
                (Some(a), Some(b)) => (a, b),
                _ => {
                    return Err(LabError::InvalidInput(format!(
                        "run {r} is not sampled at window boundaries of length {window}"
                    )))
                }
            };
            let denom = tr.observed[b] - tr.observed[a];
            if !(denom > 1e-300) {
                return Err(LabError::DegenerateRun(format!(
                    "run {r} window {m} has no observed motion"
                )));
            }
            c = c.max(tr.energy[b] / denom);
            windows += 1;
            m += 1;
        }
    }
    if windows == 0 {
        return Err(LabError::InvalidInput("no complete window in any run".into()));
    }
    Ok(CLemmaEstimate {
        c,
        runs: runs.len(),
        windows,
        k_bound: k_bound.unwrap_or(kmax),
    })
}

#[derive(Clone, Debug)]
pub struct EnvelopeRow {
    pub t: f64,
    pub energy: f64,
    pub s_bound: f64,
    pub margin: f64,
}

#[derive(Clone, Debug)]
pub struct EnvelopeComparison {
    pub rows: Vec<EnvelopeRow>,
    pub violations: usize,
    /// Smallest `S − E` relative to `E(0)`.
    pub min_relative_margin: f64,
}

impl EnvelopeComparison {
    pub fn holds(&self) -> bool {
        self.violations == 0
    }

    pub const CSV_HEADER: &'static [&'static str] = &["t", "energy", "S_bound", "margin"];

    pub fn csv_rows(&self) -> Vec<Vec<String>> {
        let f = crate::io::fmt_f64;
        self.rows
            .iter()
            .map(|r| vec![f(r.t), f(r.energy), f(r.s_bound), f(r.margin)])
            .collect()
    }
}

/// Compares `E(t)` with `S(t/T − 1)` for `t ≥ T`, with `S(0) = E(0)`.
pub fn envelope_compare(tr: &EnergyTrace, env: &DecayEnvelope) -> Result<EnvelopeComparison> {
    let e0 = *tr
        .energy
        .first()
        .ok_or_else(|| LabError::InvalidInput("empty trace".into()))?;
    let t_end = *tr.times.last().unwrap();
    let horizon = (t_end / env.window - 1.0).max(1.0);
    let rec = env.integrate(e0, horizon);
    let mut rows = Vec::new();
    let mut violations = 0;
    let mut min_margin = f64::INFINITY;
    for (t, e) in tr.times.iter().zip(&tr.energy) {
        if *t < env.window * (1.0 - 1e-12) {
            continue;
        }
        let s = rec.eval(t / env.window - 1.0);
        let margin = s - e;
        if margin < -1e-12 * e0 {
            violations += 1;
        }
        min_margin = min_margin.min(margin / e0);
        rows.push(EnvelopeRow {
            t: *t,
            energy: *e,
            s_bound: s,
            margin,
        });
    }
    Ok(EnvelopeComparison {
        rows,
        violations,
        min_relative_margin: min_margin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env() -> DecayEnvelope {
        build_envelope(&DampingLaw::power_saturated(1.0, 2.0), 2.0, std::f64::consts::PI, 5.0, 1.0).unwrap()
    }

    #[test]
    fn exponential_ode() {
        let rec = integrate_decay_ode(&|s| s, 2.0, 10.0, None);
        for (t, s) in rec.times.iter().zip(&rec.values) {
            assert!((s - 2.0 * (-t).exp()).abs() <= 1e-8 * 2.0 * (-t).exp(), "{t}");
        }
        assert!((rec.eval(3.3) - 2.0 * (-3.3f64).exp()).abs() < 1e-8);
    }

    #[test]
    fn p_and_q_are_inverses_of_their_definitions() {
        let e = env();
        for s in [1e-6, 1e-3, 0.1, 1.0, 7.0] {
            let p = e.p(s);
            assert!((e.c * p + e.r(p) - e.m * s).abs() <= 1e-12 * e.m * s);
            let x = e.inv_i_plus_p(s);
            assert!((x + e.p(x) - s).abs() <= 1e-12 * s);
            assert!((e.q(s) - (s - x)).abs() <= 1e-10 * s);
        }
    }

    #[test]
    fn tight_sequence_lemma() {
        let e = env();
        let mut seq = vec![1.0];
        for _ in 0..50 {
            let last = *seq.last().unwrap();
            seq.push(e.inv_i_plus_p(last));
        }
        let r = check_sequence_lemma(&e, &seq).unwrap();
        assert!(r.holds, "{r:?}");
    }

    #[test]
    fn premise_violation_reported() {
        let e = env();
        assert!(matches!(
            check_sequence_lemma(&e, &[1.0, 1.0]),
            Err(LabError::PremiseViolated { index: 0 })
        ));
    }

    #[test]
    fn bad_majorant_rejected() {
        let law = DampingLaw::custom(
            std::sync::Arc::new(|s: f64| s.min(1.0)),
            Some(std::sync::Arc::new(|z: f64| z)),
            1.0,
            1.0,
            2.0,
        );
        assert!(matches!(check_majorant(&law), Err(LabError::InvalidMajorant { .. })));
    }
}
