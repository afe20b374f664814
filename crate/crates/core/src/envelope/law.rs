//! Velocity damping laws `g(v) = E(|v|) v` and their admissibility checks.

use std::fmt;
use std::sync::Arc;

use crate::material::{IsotropicParams, LawKind};

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum LawFamily {
    /// `E(s) = α`.
    Linear,
    /// `E(s) = α min(s, 1)^(p-1)`.
    PowerSaturated { p: f64 },
    /// User supplied `E` with an optional concave majorant `h`.
    Custom { e: ScalarFn, h: Option<ScalarFn> },
}

impl fmt::Debug for LawFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LawFamily::Linear => write!(f, "Linear"),
            LawFamily::PowerSaturated { p } => write!(f, "PowerSaturated {{ p: {p} }}"),
            LawFamily::Custom { h, .. } => write!(f, "Custom {{ majorant: {} }}", h.is_some()),
        }
    }
}

#[derive(Clone, Debug)]
pub struct DampingLaw {
    pub family: LawFamily,
    pub alpha: f64,
    /// Lower bound of `E` on `s > 1`.
    pub m_low: f64,
    /// Upper bound of `E` on `s > 1`.
    pub m_high: f64,
    /// Lipschitz constant of `v ↦ E(|v|) v`.
    pub lipschitz: f64,
}

impl DampingLaw {
    pub fn linear(alpha: f64) -> Self {
        DampingLaw {
            family: LawFamily::Linear,
            alpha,
            m_low: alpha,
            m_high: alpha,
            lipschitz: alpha,
        }
    }

    pub fn power_saturated(alpha: f64, p: f64) -> Self {
        DampingLaw {
            family: LawFamily::PowerSaturated { p },
            alpha,
            m_low: alpha,
            m_high: alpha,
            lipschitz: alpha * p.max(1.0),
        }
    }

    pub fn custom(e: ScalarFn, h: Option<ScalarFn>, m_low: f64, m_high: f64, lipschitz: f64) -> Self {
        DampingLaw {
            family: LawFamily::Custom { e, h },
            alpha: 1.0,
            m_low,
            m_high,
            lipschitz,
        }
    }

    pub fn from_params(p: &IsotropicParams) -> Self {
        match p.damping_law {
            LawKind::Linear => DampingLaw::linear(p.friction),
            LawKind::PowerSaturated => DampingLaw::power_saturated(p.friction, p.damping_p),
        }
    }

    pub fn is_linear(&self) -> bool {
        matches!(self.family, LawFamily::Linear)
    }

    /// `E(s)`.
    pub fn eval(&self, s: f64) -> f64 {
        match &self.family {
            LawFamily::Linear => self.alpha,
            LawFamily::PowerSaturated { p } => self.alpha * s.min(1.0).powf(p - 1.0),
            LawFamily::Custom { e, .. } => e(s),
        }
    }

    /// Concave majorant `h` with `s² + E(s)² s² ≤ h(s² E(s))` on `[0, 1]`.
    pub fn majorant(&self, z: f64) -> Option<f64> {
        let a = self.alpha;
        match &self.family {
            LawFamily::Linear => Some((1.0 + a * a) * z / a),
            LawFamily::PowerSaturated { p } => {
                Some((1.0 + a * a) * (z.max(0.0) / a).powf(2.0 / (p + 1.0)))
            }
            LawFamily::Custom { h, .. } => h.as_ref().map(|h| h(z)),
        }
    }

    pub fn describe(&self) -> String {
        match &self.family {
            LawFamily::Linear => format!("linear(alpha={})", self.alpha),
            LawFamily::PowerSaturated { p } => format!("power(alpha={}, p={p})", self.alpha),
            LawFamily::Custom { .. } => "custom".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LawCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<LawCheck>,
    pub lipschitz_estimate: f64,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed(&self) -> Vec<&'static str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name).collect()
    }
}

/// Sample points on `(0, 10³]`: logarithmic plus a uniform layer around 1.
pub fn law_samples() -> Vec<f64> {
    let mut s: Vec<f64> = (0..=2200)
        .map(|k| 10f64.powf(-8.0 + 11.0 * k as f64 / 2200.0))
        .collect();
    s.extend((1..=2000).map(|k| k as f64 / 1000.0));
    s.sort_by(f64::total_cmp);
    s.dedup();
    s
}

pub fn validate_damping(law: &DampingLaw) -> ValidationReport {
    let s = law_samples();
    let e: Vec<f64> = s.iter().map(|&x| law.eval(x)).collect();
    let se: Vec<f64> = s.iter().zip(&e).map(|(x, y)| x * y).collect();
    let mut checks = Vec::new();

    let bad_pos = s.iter().zip(&e).find(|(_, v)| !(**v > 0.0));
    checks.push(LawCheck {
        name: "positive",
        passed: bad_pos.is_none(),
        detail: bad_pos
            .map(|(x, v)| format!("E({x:e}) = {v:e}"))
            .unwrap_or_else(|| "E > 0 on all samples".into()),
    });

    let bad_mono = (1..s.len()).find(|&k| !(se[k] > se[k - 1]));
    checks.push(LawCheck {
        name: "increasing",
        passed: bad_mono.is_none(),
        detail: bad_mono
            .map(|k| format!("sE(s) not increasing at s = {:e}", s[k]))
            .unwrap_or_else(|| "sE(s) strictly increasing".into()),
    });

    let head = se[0];
    let scale = law.eval(1.0).abs().max(1.0);
    let vanish = head <= 1e-4 * scale && se[..20].windows(2).all(|w| w[1] >= w[0]);
    checks.push(LawCheck {
        name: "vanishing_at_zero",
        passed: vanish,
        detail: format!("sE(s) = {head:e} at s = {:e}", s[0]),
    });

    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (x, v) in s.iter().zip(&e) {
        if *x > 1.0 {
            lo = lo.min(*v);
            hi = hi.max(*v);
        }
    }
    let tol = 1e-12 * law.m_high.abs().max(1.0);
    checks.push(LawCheck {
        name: "bounded_beyond_one",
        passed: law.m_low > 0.0 && lo >= law.m_low - tol && hi <= law.m_high + tol,
        detail: format!(
            "E on s > 1 in [{lo:e}, {hi:e}], declared [{:e}, {:e}]",
            law.m_low, law.m_high
        ),
    });

    let mut l_est: f64 = e.iter().fold(0.0, |m, v| m.max(v.abs()));
    for k in 1..s.len() {
        l_est = l_est.max(((se[k] - se[k - 1]) / (s[k] - s[k - 1])).abs());
    }
    checks.push(LawCheck {
        name: "lipschitz",
        passed: law.lipschitz >= l_est * (1.0 - 1e-6),
        detail: format!("estimated {l_est:e}, declared {:e}", law.lipschitz),
    });

    ValidationReport {
        checks,
        lipschitz_estimate: l_est,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_law_passes() {
        let r = validate_damping(&DampingLaw::power_saturated(1.0, 2.0));
        assert!(r.passed(), "{r:?}");
        assert!(r.lipschitz_estimate <= 2.0 + 1e-9);
    }

    #[test]
    fn inverse_law_fails_vanishing() {
        let law = DampingLaw::custom(Arc::new(|s: f64| 1.0 / s), None, 1e-3, 1.0, 1.0);
        let r = validate_damping(&law);
        assert!(r.failed().contains(&"vanishing_at_zero"));
    }

    #[test]
    fn linear_majorant_is_tight() {
        let law = DampingLaw::linear(0.5);
        let s: f64 = 0.3;
        let lhs = s * s + 0.25 * s * s;
        let rhs = law.majorant(s * s * 0.5).unwrap();
        assert!((lhs - rhs).abs() < 1e-15);
    }
}
