//! One-step θ-schemes with the position and flux unknowns eliminated.
//!
//! The unknown is the velocity-space state at the θ-point, `y = (1-θ) v_n + θ v_{n+1}`,
//! which satisfies
//! `[M_v + (θΔt)² S − θΔt J_v + θΔt R_v + (θΔt)²/(κ+θΔt) Hᵀ c⁻¹ H] y = rhs − θΔt N(y)`.

use crate::discretization::{BandedLu, Layout, SemiDiscreteSystem, Triplets};
use crate::error::{LabError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    Midpoint,
    BackwardEuler,
}

impl Scheme {
    pub fn theta(&self) -> f64 {
        match self {
            Scheme::Midpoint => 0.5,
            Scheme::BackwardEuler => 1.0,
        }
    }
}

pub struct Stepper<'s> {
    sys: &'s SemiDiscreteSystem,
    pub dt: f64,
    theta: f64,
    lu: BandedLu,
    mass: Vec<f64>,
    tol: f64,
    max_iter: usize,
}

#[derive(Clone, Debug)]
pub struct StepOutput {
    pub next: Vec<f64>,
    /// State at the θ-point, used for quadrature of dissipation and observation.
    pub theta_state: Vec<f64>,
    pub iterations: usize,
}

impl<'s> Stepper<'s> {
    pub fn new(sys: &'s SemiDiscreteSystem, dt: f64, scheme: Scheme, tol: f64, max_iter: usize) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(LabError::InvalidInput(format!("time step {dt} must be positive")));
        }
        let theta = scheme.theta();
        let l = sys.layout;
        let npos = l.npos();
        let td = theta * dt;
        let mass = sys.vel_mass();
        let mut t = Triplets::new(npos, npos);
        let p = |k: usize| l.interleave(k);
        for (k, m) in mass.iter().enumerate() {
            t.push(p(k), p(k), *m);
        }
        for (r, c, v) in sys.stiffness.iter() {
            t.push(p(r), p(c), td * td * v);
        }
        for (r, c, v) in sys.vel_skew.iter() {
            t.push(p(r), p(c), -td * v);
        }
        for (r, c, v) in sys.vel_damp.iter() {
            t.push(p(r), p(c), td * v);
        }
        if let Some(f) = &sys.flux {
            let kappa = sys.coeffs.kappa;
            let th0 = l.dim * l.nodes;
            for (e, cq) in f.c.iter().enumerate() {
                let s = td * td / (cq * (kappa + td));
                let row: Vec<(usize, f64)> = f.h.row(e).collect();
                for &(a, va) in &row {
                    for &(b, vb) in &row {
                        t.push(p(th0 + a), p(th0 + b), s * va * vb);
                    }
                }
            }
        }
        let lu = BandedLu::factor(&t.build())?;
        Ok(Stepper {
            sys,
            dt,
            theta,
            lu,
            mass,
            tol,
            max_iter,
        })
    }

    pub fn layout(&self) -> Layout {
        self.sys.layout
    }

    fn solve_vel(&self, rhs: &[f64]) -> Vec<f64> {
        let l = self.sys.layout;
        let mut b = vec![0.0; rhs.len()];
        for (k, v) in rhs.iter().enumerate() {
            b[l.interleave(k)] = *v;
        }
        self.lu.solve_in_place(&mut b);
        (0..rhs.len()).map(|k| b[l.interleave(k)]).collect()
    }

    pub fn step(&self, x: &[f64]) -> Result<StepOutput> {
        let sys = self.sys;
        let l = sys.layout;
        let (dt, th) = (self.dt, self.theta);
        let td = th * dt;
        let pos = &x[l.pos()];
        let vel = &x[l.vel()];
        let q = &x[l.q()];
        let kappa = sys.coeffs.kappa;

        let mut rhs0: Vec<f64> = self.mass.iter().zip(vel).map(|(m, v)| m * v).collect();
        sys.stiffness.mul_add(-td, pos, &mut rhs0);
        if let Some(f) = &sys.flux {
            let qs: Vec<f64> = q.iter().map(|qe| kappa * qe / (kappa + td)).collect();
            let th0 = l.dim * l.nodes;
            f.h.mul_t_add(-td, &qs, &mut rhs0[th0..]);
        }

        let mut iterations = 1;
        let y = if sys.has_nonlinear_damping() {
            let mut force = vec![0.0; l.npos()];
            let mut y = vel.to_vec();
            let mut converged = false;
            let mut last = f64::INFINITY;
            for it in 0..self.max_iter {
                sys.nonlinear_force(&y, &mut force);
                let rhs: Vec<f64> = rhs0.iter().zip(&force).map(|(r, g)| r - td * g).collect();
                let next = self.solve_vel(&rhs);
                let diff = next.iter().zip(&y).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                let size = next.iter().fold(0.0f64, |m, a| m.max(a.abs()));
                y = next;
                iterations = it + 1;
                last = diff;
                if diff <= self.tol * size || size == 0.0 {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(LabError::NonConvergence {
                    iterations,
                    residual: last,
                });
            }
            y
        } else {
            self.solve_vel(&rhs0)
        };

        let mut next = vec![0.0; l.len()];
        let mut mid = vec![0.0; l.len()];
        for k in 0..l.npos() {
            next[k] = pos[k] + dt * y[k];
            mid[k] = pos[k] + td * y[k];
            next[l.npos() + k] = vel[k] + (y[k] - vel[k]) / th;
            mid[l.npos() + k] = y[k];
        }
        if let Some(f) = &sys.flux {
            let th0 = l.dim * l.nodes;
            let mut hy = vec![0.0; l.nq];
            f.h.mul_add(1.0, &y[th0..], &mut hy);
            let q0 = l.q().start;
            for e in 0..l.nq {
                let qt = (kappa * q[e] + td * hy[e] / f.c[e]) / (kappa + td);
                mid[q0 + e] = qt;
                next[q0 + e] = q[e] + (qt - q[e]) / th;
            }
        }
        Ok(StepOutput {
            next,
            theta_state: mid,
            iterations,
        })
    }
}
