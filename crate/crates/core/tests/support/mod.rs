//! Shared oracles for the integration tests.
#![allow(dead_code)]

use thermolab_core::material::CoefficientSet;

/// `Σ c cos(k x)` plus `Σ s sin(k x)` with exact derivatives.
#[derive(Clone, Debug)]
pub struct Trig {
    pub cos: Vec<(f64, f64)>,
    pub sin: Vec<(f64, f64)>,
}

impl Trig {
    pub fn d(&self, order: u32, x: f64) -> f64 {
        let mut s = 0.0;
        // d^m/dx^m cos(kx) = k^m cos(kx + mπ/2), same shift for sin
        let shift = order as f64 * std::f64::consts::FRAC_PI_2;
        for &(c, k) in &self.cos {
            if order > 0 && k == 0.0 {
                continue;
            }
            s += c * k.powi(order as i32) * (k * x + shift).cos();
        }
        for &(c, k) in &self.sin {
            s += c * k.powi(order as i32) * (k * x + shift).sin();
        }
        s
    }
}

/// Smooth 1D fields compatible with clamped displacements and Dirichlet temperatures.
pub struct Manufactured1d {
    pub u: Trig,
    pub tau: Trig,
    pub v: Trig,
    pub theta: Trig,
}

impl Manufactured1d {
    pub fn standard() -> Self {
        Manufactured1d {
            // sin²x + 0.3 sin²2x
            u: Trig {
                cos: vec![(0.65, 0.0), (-0.5, 2.0), (-0.15, 4.0)],
                sin: vec![],
            },
            tau: Trig {
                cos: vec![],
                sin: vec![(1.0, 1.0), (0.4, 3.0)],
            },
            // 0.6 sin²x
            v: Trig {
                cos: vec![(0.3, 0.0), (-0.3, 2.0)],
                sin: vec![],
            },
            theta: Trig {
                cos: vec![],
                sin: vec![(0.5, 2.0)],
            },
        }
    }

    /// Values of `(u, τ, v, θ)` at `x`.
    pub fn state(&self, x: f64) -> [f64; 4] {
        [self.u.d(0, x), self.tau.d(0, x), self.v.d(0, x), self.theta.d(0, x)]
    }

    /// Continuum right-hand side of the first-order system for scalar 1D coefficients:
    /// `u̇ = v`, `τ̇ = θ`,
    /// `ρ v̇ = A u'' − C u'''' − M τ''' − β θ' + B v'' − E v`,
    /// `a θ̇ = M u''' + K τ'' − β v' + m θ''`.
    pub fn generator(&self, c: &CoefficientSet, x: f64) -> [f64; 4] {
        let a4 = c.a4.get(&[0, 0, 0, 0]);
        let c6 = c.c6.get(&[0; 6]);
        let m4 = c.m4.get(&[0; 4]);
        let k = c.k2.get(&[0, 0]);
        let beta = c.beta.get(&[0, 0]);
        let b = c.b4.get(&[0; 4]);
        let e = c.e2.get(&[0, 0]);
        let m = c.m2.get(&[0, 0]);
        let fv = (a4 * self.u.d(2, x) - c6 * self.u.d(4, x) - m4 * self.tau.d(3, x) - beta * self.theta.d(1, x)
            + b * self.v.d(2, x)
            - e * self.v.d(0, x))
            / c.rho;
        let ft = (m4 * self.u.d(3, x) + k * self.tau.d(2, x) - beta * self.v.d(1, x) + m * self.theta.d(2, x)) / c.a;
        [self.v.d(0, x), self.theta.d(0, x), fv, ft]
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(x, y) in pts {
        let (lx, ly) = (x.ln(), y.ln());
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// Composite Simpson rule on `[a, b]` with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + k as f64 * h);
    }
    s * h / 3.0
}
