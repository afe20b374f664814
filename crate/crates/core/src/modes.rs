//! Explicit mode family on the square (0, π)² showing that the resolvent of the
//! generator is unbounded when only the temperature equation is damped.

use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

use crate::error::{LabError, Result};
use crate::material::IsotropicParams;

/// Forcing norm squared, independent of `n`.
pub const F_NORM_SQ: f64 = 3.0 * PI * PI / 4.0;

pub fn radicand(p: &IsotropicParams, n: u32) -> f64 {
    let nf = n as f64;
    8.0 * (p.a3 + p.a4) * nf.powi(4) + 2.0 * p.mu * nf * nf - 1.0
}

pub fn lambda_n(p: &IsotropicParams, n: u32) -> Result<f64> {
    let r = radicand(p, n);
    if r < 0.0 {
        return Err(LabError::NegativeRadicand { n, radicand: r });
    }
    if p.rho <= 0.0 {
        return Err(LabError::InvalidCoefficients("rho must be positive".into()));
    }
    Ok((r / p.rho).sqrt())
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModeSolution {
    pub n: u32,
    pub lambda_n: f64,
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    /// Max-abs residual of the 3×3 system.
    pub residual: f64,
    /// Lower bound `λ (π/2) |A+B| / √2` for the velocity norm.
    pub u_lower: f64,
    /// Exact norm of the velocity components `iλ(u1, u2)`.
    pub velocity_norm: f64,
}

impl ModeSolution {
    /// Squared lower bound on the response norm.
    pub fn u_norm_sq(&self) -> f64 {
        self.u_lower * self.u_lower
    }

    pub fn f_norm_sq(&self) -> f64 {
        F_NORM_SQ
    }
}

/// Coefficient matrix and right-hand side of the amplitude system for `(A, B, C)`.
pub fn mode_system(p: &IsotropicParams, n: u32, lam: f64) -> ([[Complex64; 3]; 3], [Complex64; 3]) {
    let p = p.clone().derive();
    let nf = n as f64;
    let n2 = nf * nf;
    let n3 = n2 * nf;
    let n4 = n2 * n2;
    let i = Complex64::i();
    let cm = p.coupling();
    let diag = Complex64::from(-lam * lam * p.rho + (p.lambda + 3.0 * p.mu) * n2 + 2.0 * p.b2 * n4);
    let off = Complex64::from(-((p.lambda + p.mu) * n2 + 2.0 * p.b4 * n4));
    let cpl = -p.beta * lam * nf * i + 2.0 * cm * n3;
    let therm = Complex64::from(-lam * lam * p.a + 2.0 * n2) + 2.0 * lam * p.delta * n2 * i;
    let back = 2.0 * cm * n3 + p.beta * lam * nf * i;
    let m = [[diag, off, cpl], [off, diag, -cpl], [back, -back, therm]];
    let rhs = [Complex64::from(p.rho), Complex64::from(p.rho), Complex64::from(p.a)];
    (m, rhs)
}

fn solve3(m: [[Complex64; 3]; 3], rhs: [Complex64; 3], n: u32) -> Result<[Complex64; 3]> {
    let scale = m
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |acc, z| acc.max(z.norm()));
    let mut a = m;
    let mut b = rhs;
    for col in 0..3 {
        let piv = (col..3)
            .max_by(|&x, &y| a[x][col].norm().total_cmp(&a[y][col].norm()))
            .unwrap();
        let pv = a[piv][col].norm();
        if !(pv > 1e-14 * scale) {
            return Err(LabError::SingularModeSystem { n, pivot: pv });
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..3 {
            let f = a[r][col] / a[col][col];
            for k in col..3 {
                let t = a[col][k];
                a[r][k] -= f * t;
            }
            let t = b[col];
            b[r] -= f * t;
        }
    }
    let mut x = [Complex64::new(0.0, 0.0); 3];
    for r in (0..3).rev() {
        let mut s = b[r];
        for k in r + 1..3 {
            s -= a[r][k] * x[k];
        }
        x[r] = s / a[r][r];
    }
    Ok(x)
}

pub fn solve_mode_system(p: &IsotropicParams, n: u32) -> Result<ModeSolution> {
    let lam = lambda_n(p, n)?;
    let (m, _) = mode_system(p, n, lam);
    // Rows 1 ± 2 in the unknowns s = A + B, d = A − B. With λ²ρ equal to the radicand
    // the sum coefficient reduces to 1 + (2(b2 − b4) − 8(a3 + a4)) n⁴, and the derived
    // constants have b2 − b4 = 2 b3 = 4(a3 + a4), so it is exactly 1. Forming it in
    // floating point would only add O(ε n⁴) noise.
    let sum = Complex64::from(1.0);
    let dif = m[0][0] - m[0][1];
    let cpl = m[0][2];
    let back = m[2][0];
    let therm = m[2][2];
    let zero = Complex64::new(0.0, 0.0);
    let rot = [[sum, zero, zero], [zero, dif, 2.0 * cpl], [zero, back, therm]];
    let rhs = [Complex64::from(2.0 * p.rho), zero, Complex64::from(p.a)];
    let x = solve3(rot, rhs, n)?;
    let (sv, dv, c) = (x[0], x[1], x[2]);
    let r_sum = sum * sv - rhs[0];
    let r_dif = dif * dv + 2.0 * cpl * c;
    let r3 = back * dv + therm * c - rhs[2];
    let residual = (0.5 * (r_sum + r_dif))
        .norm()
        .max((0.5 * (r_sum - r_dif)).norm())
        .max(r3.norm());
    let (a, b) = (0.5 * (sv + dv), 0.5 * (sv - dv));
    let u_lower = lam * (PI / 2.0) * (a + b).norm() / 2f64.sqrt();
    let velocity_norm = lam * (PI / 2.0) * (a.norm_sqr() + b.norm_sqr()).sqrt();
    Ok(ModeSolution {
        n,
        lambda_n: lam,
        a,
        b,
        c,
        residual,
        u_lower,
        velocity_norm,
    })
}

#[derive(Clone, Debug)]
pub struct ScanRow {
    pub n: u32,
    pub result: std::result::Result<ModeSolution, String>,
}

#[derive(Clone, Debug)]
pub struct BlowupTable {
    pub rows: Vec<ScanRow>,
    /// Whether `u_lower` is strictly increasing over the solved rows.
    pub monotone: bool,
    /// Least-squares slope of `ln u_lower` against `ln n`.
    pub growth_exponent: f64,
}

impl BlowupTable {
    pub fn solved(&self) -> impl Iterator<Item = &ModeSolution> {
        self.rows.iter().filter_map(|r| r.result.as_ref().ok())
    }

    pub const CSV_HEADER: &'static [&'static str] = &[
        "n",
        "lambda_n",
        "U_lower",
        "U_velocity_norm",
        "F_norm_sq",
        "residual",
        "re_A",
        "im_A",
        "re_B",
        "im_B",
        "re_C",
        "im_C",
        "status",
    ];

    pub fn csv_rows(&self) -> Vec<Vec<String>> {
        let f = crate::io::fmt_f64;
        self.rows
            .iter()
            .map(|row| match &row.result {
                Ok(s) => vec![
                    row.n.to_string(),
                    f(s.lambda_n),
                    f(s.u_lower),
                    f(s.velocity_norm),
                    f(F_NORM_SQ),
                    f(s.residual),
                    f(s.a.re),
                    f(s.a.im),
                    f(s.b.re),
                    f(s.b.im),
                    f(s.c.re),
                    f(s.c.im),
                    "ok".into(),
                ],
                Err(e) => {
                    let mut v = vec![row.n.to_string()];
                    v.extend(std::iter::repeat(String::new()).take(11));
                    v.push(e.replace(',', ";"));
                    v
                }
            })
            .collect()
    }
}

pub fn resolvent_blowup_scan(p: &IsotropicParams, n_max: u32) -> BlowupTable {
    let rows: Vec<ScanRow> = (1..=n_max)
        .into_par_iter()
        .map(|n| ScanRow {
            n,
            result: solve_mode_system(p, n).map_err(|e| e.to_string()),
        })
        .collect();
    let solved: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| r.result.as_ref().ok())
        .map(|s| (s.n as f64, s.u_lower))
        .collect();
    let monotone = solved.windows(2).all(|w| w[1].1 > w[0].1);
    let pts: Vec<(f64, f64)> = solved
        .iter()
        .filter(|(_, u)| *u > 0.0)
        .map(|(n, u)| (n.ln(), u.ln()))
        .collect();
    let growth_exponent = crate::numerics::lsq_line(&pts).map(|(s, _)| s).unwrap_or(f64::NAN);
    BlowupTable {
        rows,
        monotone,
        growth_exponent,
    }
}

/// Residuals of the boundary conditions evaluated for the mode ansatz.
#[derive(Clone, Debug, PartialEq)]
pub struct BcReport {
    pub conditions: Vec<BcResidual>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BcResidual {
    pub name: &'static str,
    pub max_abs: f64,
    /// `max_abs` divided by the magnitude scale of the contributing terms.
    pub relative: f64,
}

impl BcReport {
    pub fn max_relative(&self) -> f64 {
        self.conditions.iter().fold(0.0, |m, c| m.max(c.relative))
    }
}

/// Complex-amplitude trigonometric field `amp · f(n x + φx) · g(n y + φy)` with
/// `f, g ∈ {sin, cos}` expressed through phase shifts of `sin`.
#[derive(Clone, Copy, Debug)]
pub struct AnsatzField {
    pub amp: Complex64,
    pub n: f64,
    pub phase_x: f64,
    pub phase_y: f64,
}

impl AnsatzField {
    fn sin_field(amp: Complex64, n: f64, px: f64, py: f64) -> Self {
        AnsatzField {
            amp,
            n,
            phase_x: px,
            phase_y: py,
        }
    }

    /// Partial derivative with multi-index counts `(kx, ky)` at `(x, y)`.
    pub fn deriv(&self, kx: u32, ky: u32, x: f64, y: f64) -> Complex64 {
        let fx = (self.n * x + self.phase_x + kx as f64 * PI / 2.0).sin();
        let fy = (self.n * y + self.phase_y + ky as f64 * PI / 2.0).sin();
        self.amp * self.n.powi((kx + ky) as i32) * fx * fy
    }
}

/// Displacement and temperature-displacement ansatz fields `(u1, u2, τ)`.
#[derive(Clone, Copy, Debug)]
pub struct Ansatz {
    pub u: [AnsatzField; 2],
    pub tau: AnsatzField,
}

impl Ansatz {
    /// `u1 = A sin sin`, `u2 = B cos cos`, `τ = C cos(nx) sin(ny)`.
    pub fn from_solution(s: &ModeSolution) -> Self {
        let n = s.n as f64;
        let h = PI / 2.0;
        Ansatz {
            u: [
                AnsatzField::sin_field(s.a, n, 0.0, 0.0),
                AnsatzField::sin_field(s.b, n, h, h),
            ],
            tau: AnsatzField::sin_field(s.c, n, h, 0.0),
        }
    }

    fn d(f: &AnsatzField, idx: &[usize], x: f64, y: f64) -> Complex64 {
        let kx = idx.iter().filter(|&&k| k == 0).count() as u32;
        let ky = idx.len() as u32 - kx;
        f.deriv(kx, ky, x, y)
    }

    /// `κ_{IJK} = u_{K,IJ}` plus further derivatives in `extra`.
    fn kappa(&self, i: usize, j: usize, k: usize, extra: &[usize], x: f64, y: f64) -> Complex64 {
        let mut idx = vec![i, j];
        idx.extend_from_slice(extra);
        Self::d(&self.u[k], &idx, x, y)
    }

    /// Higher-order stress `σ_{IJK}` and its derivative along `extra`, together
    /// with the sum of magnitudes of the contributing terms.
    pub fn sigma(&self, p: &IsotropicParams, ijk: [usize; 3], extra: &[usize], x: f64, y: f64) -> (Complex64, f64) {
        let [i, j, k] = ijk;
        let dl = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
        let lap_u = |c: usize| -> Complex64 {
            (0..2).map(|l| self.kappa(l, l, c, extra, x, y)).sum()
        };
        let grad_div = |c: usize| -> Complex64 {
            (0..2).map(|l| self.kappa(c, l, l, extra, x, y)).sum()
        };
        let tau_d = |c: usize| -> Complex64 {
            let mut idx = vec![c];
            idx.extend_from_slice(extra);
            Self::d(&self.tau, &idx, x, y)
        };
        let terms = [
            0.5 * p.a1 * (dl(j, k) * lap_u(i) + 2.0 * dl(i, j) * grad_div(k) + dl(i, k) * lap_u(j)),
            p.a2 * (dl(j, k) * grad_div(i) + dl(i, k) * grad_div(j)),
            2.0 * p.a3 * dl(i, j) * lap_u(k),
            2.0 * p.a4 * self.kappa(i, j, k, extra, x, y),
            p.a5 * (self.kappa(k, j, i, extra, x, y) + self.kappa(k, i, j, extra, x, y)),
            p.m1 * dl(i, j) * tau_d(k),
            p.m2 * (dl(j, k) * tau_d(i) + dl(i, k) * tau_d(j)),
        ];
        let sum = terms.iter().sum();
        let scale = terms.iter().map(|z| z.norm()).sum();
        (sum, scale)
    }
}

/// Chebyshev–Gauss points on `(0, π)`.
fn edge_samples(count: usize) -> Vec<f64> {
    (0..count)
        .map(|k| {
            let t = ((2 * k + 1) as f64 * PI / (2 * count) as f64).cos();
            PI / 2.0 * (1.0 - t)
        })
        .collect()
}

pub fn verify_ansatz_bc(p: &IsotropicParams, s: &ModeSolution, sample_count: usize) -> BcReport {
    verify_fields_bc(p, &Ansatz::from_solution(s), sample_count)
}

/// Evaluates the mechanical conditions on all of the boundary and the thermal
/// conditions on their respective edges (`τ = 0` on y ∈ {0, π}, `τ_ν = 0` on x ∈ {0, π}).
pub fn verify_fields_bc(p: &IsotropicParams, f: &Ansatz, sample_count: usize) -> BcReport {
    let p = p.clone().derive();
    let ts = edge_samples(sample_count.max(1));
    // (x, y, normal, on_x_edge)
    let mut pts: Vec<(f64, f64, [f64; 2], bool)> = Vec::new();
    for &t in &ts {
        pts.push((0.0, t, [-1.0, 0.0], true));
        pts.push((PI, t, [1.0, 0.0], true));
        pts.push((t, 0.0, [0.0, -1.0], false));
        pts.push((t, PI, [0.0, 1.0], false));
    }
    let coef_scale = [p.a1, p.a2, p.a3, p.a4, p.a5, p.m1, p.m2]
        .iter()
        .map(|v| v.abs())
        .sum::<f64>()
        .max(f64::MIN_POSITIVE);
    let n = f.tau.n.max(1.0);
    let amp = f.u[0].amp.norm() + f.u[1].amp.norm() + f.tau.amp.norm();
    let tiny = 1e-300;
    let mut acc: Vec<(&'static str, f64, f64)> = vec![
        ("sigma_111", 0.0, 0.0),
        ("sigma_221", 0.0, 0.0),
        ("sigma_122", 0.0, 0.0),
        ("flux", 0.0, 0.0),
        ("tau_dirichlet", 0.0, 0.0),
        ("tau_neumann", 0.0, 0.0),
    ];
    let mut record = |k: usize, v: Complex64, scale: f64| {
        acc[k].1 = acc[k].1.max(v.norm());
        acc[k].2 = acc[k].2.max(v.norm() / scale.max(tiny));
    };
    // scale floor: magnitude of a typical term at this frequency
    let floor2 = coef_scale * amp * n * n;
    let floor3 = floor2 * n;
    for &(x, y, nu, on_x_edge) in &pts {
        for (k, ijk) in [[0, 0, 0], [1, 1, 0], [0, 1, 1]].into_iter().enumerate() {
            let (v, sc) = f.sigma(&p, ijk, &[], x, y);
            record(k, v, sc.max(floor2));
        }
        let (s112_1, sa) = f.sigma(&p, [0, 0, 1], &[0], x, y);
        let (s222_2, sb) = f.sigma(&p, [1, 1, 1], &[1], x, y);
        let flux = s112_1 * nu[0] + s222_2 * nu[1];
        record(3, flux, (sa * nu[0].abs() + sb * nu[1].abs()).max(floor3));
        let tau_scale = (f.tau.amp.norm() * n).max(tiny);
        if on_x_edge {
            let dn = f.tau.deriv(1, 0, x, y) * nu[0];
            record(5, dn, tau_scale);
        } else {
            record(4, f.tau.deriv(0, 0, x, y), tau_scale);
        }
    }
    BcReport {
        conditions: acc
            .into_iter()
            .map(|(name, max_abs, relative)| BcResidual {
                name,
                max_abs,
                relative,
            })
            .collect(),
    }
}
