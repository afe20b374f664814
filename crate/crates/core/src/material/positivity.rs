use nalgebra::{DMatrix, SymmetricEigen};

use super::coefficients::CoefficientSet;
use super::tensor::Tensor;

/// Relative tolerance used for semidefiniteness verdicts.
pub const PSD_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct PositivityReport {
    /// Smallest eigenvalue of the joint (Hessian, temperature-gradient) form.
    pub joint_min_eig: f64,
    /// Smallest eigenvalue of the displacement-gradient form.
    pub gradient_min_eig: f64,
    pub b_min_eig: f64,
    pub m_min_eig: f64,
    pub e_min_eig: f64,
    pub rho: f64,
    pub a: f64,
}

impl PositivityReport {
    /// Largest α ≥ 0 for the joint higher-order form.
    pub fn alpha_joint(&self) -> f64 {
        self.joint_min_eig.max(0.0)
    }

    /// Largest α ≥ 0 for the gradient form.
    pub fn alpha_gradient(&self) -> f64 {
        self.gradient_min_eig.max(0.0)
    }

    pub fn b_psd(&self) -> bool {
        self.b_min_eig >= -PSD_TOL
    }

    pub fn m_psd(&self) -> bool {
        self.m_min_eig >= -PSD_TOL
    }

    pub fn e_psd(&self) -> bool {
        self.e_min_eig >= -PSD_TOL
    }

    /// Positive inertia and strictly positive elastic forms.
    pub fn strict_elastic(&self) -> bool {
        self.rho > 0.0 && self.a > 0.0 && self.joint_min_eig > 0.0 && self.gradient_min_eig > 0.0
    }

    /// Positive inertia and semidefinite elastic forms.
    pub fn semidefinite_elastic(&self) -> bool {
        self.rho > 0.0
            && self.a > 0.0
            && self.joint_min_eig >= -PSD_TOL
            && self.gradient_min_eig >= -PSD_TOL
    }

    /// Key/value lines for summaries.
    pub fn records(&self) -> Vec<(String, String)> {
        let f = |v: f64| format!("{v:.16e}");
        vec![
            ("rho".into(), f(self.rho)),
            ("a".into(), f(self.a)),
            ("joint_min_eig".into(), f(self.joint_min_eig)),
            ("alpha_joint".into(), f(self.alpha_joint())),
            ("gradient_min_eig".into(), f(self.gradient_min_eig)),
            ("alpha_gradient".into(), f(self.alpha_gradient())),
            ("b_min_eig".into(), f(self.b_min_eig)),
            ("b_psd".into(), self.b_psd().to_string()),
            ("m_min_eig".into(), f(self.m_min_eig)),
            ("m_psd".into(), self.m_psd().to_string()),
            ("e_min_eig".into(), f(self.e_min_eig)),
            ("e_psd".into(), self.e_psd().to_string()),
            ("strict_elastic".into(), self.strict_elastic().to_string()),
        ]
    }
}

pub fn check_positivity(c: &CoefficientSet) -> PositivityReport {
    PositivityReport {
        joint_min_eig: min_eig(&joint_form_matrix(c)),
        gradient_min_eig: min_eig(&gradient_form_matrix(&c.a4)),
        b_min_eig: min_eig(&gradient_form_matrix(&c.b4)),
        m_min_eig: min_eig(&matrix2(&c.m2)),
        e_min_eig: min_eig(&matrix2(&c.e2)),
        rho: c.rho,
        a: c.a,
    }
}

fn min_eig(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    let sym = (m + m.transpose()) * 0.5;
    SymmetricEigen::new(sym)
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |a, &b| a.min(b))
}

fn matrix2(t: &Tensor) -> DMatrix<f64> {
    let d = t.dim();
    DMatrix::from_fn(d, d, |i, j| t.get(&[i, j]))
}

/// Form `T[i][J][K][j] G_iJ G_jK` on all d×d gradients (Frobenius norm).
pub fn gradient_form_matrix(t: &Tensor) -> DMatrix<f64> {
    let d = t.dim();
    DMatrix::from_fn(d * d, d * d, |p, q| {
        let (i, jj) = (p / d, p % d);
        let (j, kk) = (q / d, q % d);
        t.get(&[i, jj, kk, j])
    })
}

/// Joint form on symmetric Hessians and temperature gradients, expressed in an
/// orthonormal basis of that space (off-diagonal Hessian slots carry weight 2).
pub fn joint_form_matrix(c: &CoefficientSet) -> DMatrix<f64> {
    let d = c.dim;
    let mut basis: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    let mut norms: Vec<f64> = Vec::new();
    for k in 0..d {
        for s in 0..d {
            for t in s..d {
                let mut h = vec![0.0; d * d * d];
                h[k * d * d + s * d + t] = 1.0;
                h[k * d * d + t * d + s] = 1.0;
                basis.push((h, vec![0.0; d]));
                norms.push(if s == t { 1.0 } else { 2.0 });
            }
        }
    }
    for l in 0..d {
        let mut g = vec![0.0; d];
        g[l] = 1.0;
        basis.push((vec![0.0; d * d * d], g));
        norms.push(1.0);
    }
    let n = basis.len();
    let mut q = DMatrix::zeros(n, n);
    for p in 0..n {
        for r in p..n {
            let v = joint_bilinear(c, &basis[p], &basis[r]) / (norms[p] * norms[r]).sqrt();
            q[(p, r)] = v;
            q[(r, p)] = v;
        }
    }
    q
}

fn joint_bilinear(c: &CoefficientSet, x: &(Vec<f64>, Vec<f64>), y: &(Vec<f64>, Vec<f64>)) -> f64 {
    let d = c.dim;
    let h = |v: &Vec<f64>, i: usize, a: usize, b: usize| v[i * d * d + a * d + b];
    let mut acc = 0.0;
    for (idx, val) in c.c6.entries() {
        acc += val * h(&x.0, idx[0], idx[1], idx[2]) * h(&y.0, idx[5], idx[3], idx[4]);
    }
    for (idx, val) in c.m4.entries() {
        acc += val
            * (h(&x.0, idx[0], idx[1], idx[2]) * y.1[idx[3]]
                + h(&y.0, idx[0], idx[1], idx[2]) * x.1[idx[3]]);
    }
    for (idx, val) in c.k2.entries() {
        acc += val * x.1[idx[0]] * y.1[idx[1]];
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::material::coefficients::{expand_isotropic, IsotropicParams};

    #[test]
    fn scalar_one_dimensional_joint_form() {
        let mut c = CoefficientSet::zeros(1, 1.0, 1.0);
        c.c6.set(&[0; 6], 2.0);
        c.m4.set(&[0; 4], 0.5);
        c.k2.set(&[0, 0], 1.0);
        // [[2, 0.5], [0.5, 1]]
        let expected = 1.5 - (0.25f64 + 0.25).sqrt();
        let r = check_positivity(&c);
        assert!((r.joint_min_eig - expected).abs() < 1e-14);
    }

    #[test]
    fn lame_margins() {
        for (lambda, mu, expected) in [(1.0, 1.0, 1.0), (-1.5, 1.0, 0.5), (0.0, 2.0, 2.0)] {
            let p = IsotropicParams {
                lambda,
                mu,
                ..Default::default()
            };
            let c = expand_isotropic(&p).unwrap();
            let r = check_positivity(&c);
            assert!((r.gradient_min_eig - expected).abs() < 1e-13, "{lambda} {mu}");
        }
    }

    #[test]
    fn negative_definite_heat_tensor_detected() {
        let p = IsotropicParams {
            delta: -1.0,
            ..Default::default()
        };
        let r = check_positivity(&expand_isotropic(&p).unwrap());
        assert!(!r.m_psd());
    }
}
