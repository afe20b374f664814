//! Finite-difference semi-discretisation on (0, π)^d.

mod banded;
mod grid;
mod sparse;
mod system;

pub use banded::BandedLu;
pub use grid::{pair_site, Boundary, Deriv, Grid, Site};
pub use sparse::{CsrMatrix, Triplets};
pub use system::{assemble, FluxBlock, Layout, SemiDiscreteSystem, StateVector, Variant};

use nalgebra::DMatrix;

use crate::error::{LabError, Result};

/// Largest state dimension for dense eigenvalue computations.
pub const DENSE_CAP: usize = 4000;

#[derive(Clone, Debug)]
pub struct StaticSolution {
    pub state: StateVector,
    /// `‖𝓐U − F‖∞ / ‖F‖∞`.
    pub residual: f64,
}

/// Solves `𝓐 U = F` for the linear generator `𝓐 = M⁻¹(J − R)`.
pub fn static_solve(sys: &SemiDiscreteSystem, f: &StateVector) -> Result<StaticSolution> {
    if sys.has_nonlinear_damping() {
        return Err(LabError::InvalidInput(
            "static solve needs a linear generator".into(),
        ));
    }
    let l = sys.layout;
    if f.layout != l {
        return Err(LabError::InvalidInput("right-hand side layout mismatch".into()));
    }
    let mut u = sys.zero_state();
    let vel: Vec<f64> = f.pos().to_vec();
    u.data[l.vel()].copy_from_slice(&vel);
    let mut q = vec![0.0; l.nq];
    if let Some(fl) = &sys.flux {
        fl.h.mul_add(1.0, &vel[l.dim * l.nodes..], &mut q);
        for e in 0..l.nq {
            q[e] = (q[e] - sys.coeffs.kappa * fl.c[e] * f.q()[e]) / fl.c[e];
        }
        u.data[l.q()].copy_from_slice(&q);
    }
    let mut rhs = vec![0.0; l.npos()];
    sys.vel_skew.mul_add(1.0, &vel, &mut rhs);
    sys.vel_damp.mul_add(-1.0, &vel, &mut rhs);
    if let Some(fl) = &sys.flux {
        fl.h.mul_t_add(-1.0, &q, &mut rhs[l.dim * l.nodes..]);
    }
    for (k, m) in sys.vel_mass().iter().enumerate() {
        rhs[k] -= m * f.vel()[k];
    }
    let mut t = Triplets::new(l.npos(), l.npos());
    for (r, c, v) in sys.stiffness.iter() {
        t.push(l.interleave(r), l.interleave(c), v);
    }
    let lu = BandedLu::factor(&t.build())?;
    let mut b = vec![0.0; l.npos()];
    for (k, v) in rhs.iter().enumerate() {
        b[l.interleave(k)] = *v;
    }
    lu.solve_in_place(&mut b);
    for k in 0..l.npos() {
        u.data[k] = b[l.interleave(k)];
    }
    let au = apply_generator(sys, &u.data);
    let fnorm = crate::numerics::norm_inf(&f.data).max(f64::MIN_POSITIVE);
    let residual = au
        .iter()
        .zip(&f.data)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
        / fnorm;
    Ok(StaticSolution { state: u, residual })
}

/// `𝓐 x = M⁻¹(J − R) x` for the linear part.
pub fn apply_generator(sys: &SemiDiscreteSystem, x: &[f64]) -> Vec<f64> {
    let a = sys.apply_conservative(x);
    let d = sys.apply_damping(x);
    a.iter().zip(&d).map(|(a, d)| a - d).collect()
}

/// Dense `M⁻¹(J − R)` built blockwise (the position rows are the identity shift).
pub fn dense_generator(sys: &SemiDiscreteSystem) -> Result<DMatrix<f64>> {
    let l = sys.layout;
    let n = l.len();
    if n > DENSE_CAP {
        return Err(LabError::SizeCapExceeded { size: n, cap: DENSE_CAP });
    }
    let mut a = DMatrix::zeros(n, n);
    let p = l.npos();
    for k in 0..p {
        a[(k, p + k)] = 1.0;
    }
    let mass = sys.vel_mass();
    for (r, c, v) in sys.stiffness.iter() {
        a[(p + r, c)] -= v / mass[r];
    }
    for (r, c, v) in sys.vel_skew.iter() {
        a[(p + r, p + c)] += v / mass[r];
    }
    for (r, c, v) in sys.vel_damp.iter() {
        a[(p + r, p + c)] -= v / mass[r];
    }
    if let Some(f) = &sys.flux {
        let q0 = l.q().start;
        let th0 = l.dim * l.nodes;
        let fm = sys.flux_mass();
        for (e, node, v) in f.h.iter() {
            a[(q0 + e, p + th0 + node)] += v / fm[e];
            a[(p + th0 + node, q0 + e)] -= v / mass[th0 + node];
        }
        for e in 0..l.nq {
            a[(q0 + e, q0 + e)] -= 1.0 / sys.coeffs.kappa;
        }
    }
    Ok(a)
}

/// Largest real part of the spectrum of the linear generator.
pub fn spectral_abscissa(sys: &SemiDiscreteSystem) -> Result<f64> {
    if sys.has_nonlinear_damping() {
        return Err(LabError::InvalidInput(
            "spectral abscissa needs a linear generator".into(),
        ));
    }
    let a = dense_generator(sys)?;
    let ev = a.complex_eigenvalues();
    Ok(ev.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max))
}
