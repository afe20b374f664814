use crate::error::{LabError, Result};
use crate::material::{check_positivity, CoefficientSet};
use crate::numerics::lsq_fit;

/// Fraction of the trace discarded as transient before fitting.
pub const TRANSIENT_FRACTION: f64 = 0.1;
/// Inflation applied to the fitted constants in the pointwise check.
pub const BOUND_SLACK: f64 = 1.05;

#[derive(Clone, Debug, PartialEq)]
pub struct DecayFit {
    /// Prefactor `C` in `E(t) ≤ C E(0) e^{-c₀ t}`.
    pub c: f64,
    pub c0: f64,
    /// Coefficient of determination of the log-linear fit.
    pub r2: f64,
    pub window_start: f64,
    /// Decades of energy lost over the trace.
    pub decades: f64,
    /// Largest `E(t) / bound(t)` with inflated constants.
    pub worst_bound_ratio: f64,
}

impl DecayFit {
    pub fn bound_holds(&self) -> bool {
        self.worst_bound_ratio <= 1.0
    }

    /// Whether the trace looks exponential (`r² ≥ 0.99`).
    pub fn is_exponential(&self) -> bool {
        self.r2 >= 0.99
    }

    pub fn records(&self) -> Vec<(String, String)> {
        let f = crate::io::fmt_f64;
        vec![
            ("C".into(), f(self.c)),
            ("c0".into(), f(self.c0)),
            ("r2".into(), f(self.r2)),
            ("window_start".into(), f(self.window_start)),
            ("decades".into(), f(self.decades)),
            ("worst_bound_ratio".into(), f(self.worst_bound_ratio)),
            ("bound_holds".into(), self.bound_holds().to_string()),
            ("exponential".into(), self.is_exponential().to_string()),
        ]
    }
}

/// Least-squares fit of `ln E` over the post-transient window.
///
/// `C` is the smallest prefactor making the fitted envelope hold on the window;
/// the pointwise check then uses `1.05 C` and `c₀ / 1.05` on every sample.
pub fn fit_decay(times: &[f64], energy: &[f64]) -> Result<DecayFit> {
    if times.len() != energy.len() || times.len() < 3 {
        return Err(LabError::InvalidInput("trace needs at least three samples".into()));
    }
    let e0 = energy[0];
    if !(e0 > 0.0) {
        return Err(LabError::DegenerateRun("initial energy is zero".into()));
    }
    let e_end = *energy.last().unwrap();
    let ratio = e_end / e0;
    if ratio > 0.1 {
        return Err(LabError::InsufficientDecay { ratio });
    }
    let (t0, t1) = (times[0], *times.last().unwrap());
    let start = t0 + TRANSIENT_FRACTION * (t1 - t0);
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(energy)
        .filter(|(t, e)| **t >= start && **e > 0.0)
        .map(|(t, e)| (*t, e.ln()))
        .collect();
    let fit = lsq_fit(&pts).ok_or_else(|| LabError::InvalidInput("degenerate fit window".into()))?;
    let c0 = -fit.slope;
    let c = pts
        .iter()
        .map(|(t, le)| (le + c0 * t).exp() / e0)
        .fold(0.0, f64::max);
    let worst = times
        .iter()
        .zip(energy)
        .map(|(t, e)| e / (BOUND_SLACK * c * e0 * (-(c0 / BOUND_SLACK) * t).exp()))
        .fold(0.0, f64::max);
    Ok(DecayFit {
        c,
        c0,
        r2: fit.r2,
        window_start: start,
        decades: -(e_end.max(f64::MIN_POSITIVE) / e0).log10(),
        worst_bound_ratio: worst,
    })
}

/// Constants of the multiplier argument for frictional damping, with every
/// inequality made strict by a 1% margin.
#[derive(Clone, Debug, PartialEq)]
pub struct ProofRate {
    pub alpha: f64,
    pub r0: f64,
    pub eps: f64,
    pub n_mult: f64,
    pub c_hat: f64,
    pub c_tilde: f64,
    pub c0: f64,
}

pub fn proof_chain_rate(c: &CoefficientSet) -> Result<ProofRate> {
    let rep = check_positivity(c);
    let alpha = rep
        .joint_min_eig
        .min(rep.gradient_min_eig)
        .min(rep.e_min_eig)
        .min(rep.m_min_eig);
    if !(alpha > 0.0) {
        return Err(LabError::InvalidCoefficients(format!(
            "no positive margin (alpha = {alpha:e})"
        )));
    }
    let n = c.dim as f64;
    let cf = 1.0 / n;
    let r0 = 1.01
        * [c.beta.max_abs(), c.m2.max_abs(), c.e2.max_abs(), c.a, c.rho]
            .into_iter()
            .fold(0.0, f64::max);
    let mf = cf.max(1.0);
    let eps = 0.99 * alpha / (2.0 * r0 * n * mf);
    let n_mult = 1.01 * (0.5 + r0 * n / (2.0 * alpha) * (2.0 / eps + mf));
    let a_norm = crate::material::gradient_form_matrix(&c.a4).norm();
    let ck_norm = crate::material::joint_form_matrix(c).norm();
    let c_up = 0.5 * [c.rho, c.a * cf, a_norm, ck_norm].into_iter().fold(0.0, f64::max);
    let c_hat = 0.5 * alpha / c_up;
    let c_e = 0.5 * c.rho.min(c.a).min(rep.gradient_min_eig).min(rep.joint_min_eig);
    let c_tilde = [c.rho, c.a, c.rho * cf, c.a * cf].into_iter().fold(0.0, f64::max) / (2.0 * c_e);
    Ok(ProofRate {
        alpha,
        r0,
        eps,
        n_mult,
        c_hat,
        c_tilde,
        c0: c_hat / (n_mult + c_tilde),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_exponential() {
        let t: Vec<f64> = (0..=200).map(|k| k as f64 * 0.05).collect();
        let e: Vec<f64> = t.iter().map(|t| (-2.0 * t).exp()).collect();
        let f = fit_decay(&t, &e).unwrap();
        assert!((f.c - 1.0).abs() < 1e-6 && (f.c0 - 2.0).abs() < 1e-6);
        assert!(f.bound_holds());
    }

    #[test]
    fn flat_trace_rejected() {
        let t: Vec<f64> = (0..10).map(|k| k as f64).collect();
        let e = vec![1.0; 10];
        assert!(matches!(fit_decay(&t, &e), Err(LabError::InsufficientDecay { .. })));
    }

    #[test]
    fn algebraic_decay_not_exponential() {
        let t: Vec<f64> = (0..=1000).map(|k| k as f64 * 0.1).collect();
        let e: Vec<f64> = t.iter().map(|t| (1.0 + t).powi(-2)).collect();
        match fit_decay(&t, &e) {
            Err(LabError::InsufficientDecay { .. }) => {}
            Ok(f) => assert!(!f.is_exponential() || !f.bound_holds(), "{f:?}"),
            Err(e) => panic!("{e}"),
        }
    }
}
