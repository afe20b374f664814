use super::tensor::{kron, Tensor, C6_LEFT, C6_MAJOR, C6_RIGHT, M4_HESS, MAJOR4, SWAP2};
use crate::error::{LabError, Result};

/// Full anisotropic coefficient set in a fixed spatial dimension.
///
/// Index conventions: `a4[i][J][K][j]`, `c6[i][a][b][c][d][j]`, `m4[i][J][K][L]`,
/// `k2[I][J]`, `beta[J][i]`, `m2[I][J]`, `b4[i][J][K][j]`, `e2[i][j]`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientSet {
    pub dim: usize,
    pub rho: f64,
    pub a: f64,
    pub a4: Tensor,
    pub c6: Tensor,
    pub m4: Tensor,
    pub k2: Tensor,
    pub beta: Tensor,
    pub m2: Tensor,
    pub b4: Tensor,
    pub e2: Tensor,
    /// Flux relaxation time; only used by the Cattaneo variant.
    pub kappa: f64,
}

impl CoefficientSet {
    pub fn zeros(dim: usize, rho: f64, a: f64) -> Self {
        CoefficientSet {
            dim,
            rho,
            a,
            a4: Tensor::zeros(dim, 4),
            c6: Tensor::zeros(dim, 6),
            m4: Tensor::zeros(dim, 4),
            k2: Tensor::zeros(dim, 2),
            beta: Tensor::zeros(dim, 2),
            m2: Tensor::zeros(dim, 2),
            b4: Tensor::zeros(dim, 4),
            e2: Tensor::zeros(dim, 2),
            kappa: 0.0,
        }
    }

    /// Projects every tensor onto its symmetry class.
    pub fn symmetrize(&mut self) {
        self.a4 = self.a4.symmetrized(&[MAJOR4]);
        self.c6 = self.c6.symmetrized(&[C6_LEFT, C6_RIGHT, C6_MAJOR]);
        self.m4 = self.m4.symmetrized(&[M4_HESS]);
        self.k2 = self.k2.symmetrized(&[SWAP2]);
        self.m2 = self.m2.symmetrized(&[SWAP2]);
        self.b4 = self.b4.symmetrized(&[MAJOR4]);
        self.e2 = self.e2.symmetrized(&[SWAP2]);
    }

    pub fn validate_shapes(&self) -> Result<()> {
        if self.dim != 1 && self.dim != 2 {
            return Err(LabError::InvalidCoefficients(format!(
                "dimension {} not supported",
                self.dim
            )));
        }
        let checks: [(&str, &Tensor, usize); 8] = [
            ("A", &self.a4, 4),
            ("C", &self.c6, 6),
            ("M", &self.m4, 4),
            ("K", &self.k2, 2),
            ("beta", &self.beta, 2),
            ("m", &self.m2, 2),
            ("B", &self.b4, 4),
            ("E", &self.e2, 2),
        ];
        for (name, t, rank) in checks {
            if t.dim() != self.dim || t.rank() != rank {
                return Err(LabError::InvalidCoefficients(format!(
                    "tensor {name} has dim {} rank {}, expected dim {} rank {rank}",
                    t.dim(),
                    t.rank(),
                    self.dim
                )));
            }
        }
        let all_finite = [self.rho, self.a, self.kappa].iter().all(|v| v.is_finite())
            && [
                &self.a4, &self.c6, &self.m4, &self.k2, &self.beta, &self.m2, &self.b4,
                &self.e2,
            ]
            .iter()
            .all(|t| t.max_abs().is_finite());
        if !all_finite {
            return Err(LabError::InvalidCoefficients(
                "non-finite coefficient".into(),
            ));
        }
        Ok(())
    }

    /// Whether the heat-conduction tensor is diagonal with positive entries.
    pub fn m2_is_positive_diagonal(&self) -> bool {
        (0..self.dim).all(|i| {
            self.m2.get(&[i, i]) > 0.0
                && (0..self.dim).all(|j| i == j || self.m2.get(&[i, j]) == 0.0)
        })
    }
}

/// Isotropic material constants plus damping extras.
#[derive(Clone, Debug, PartialEq)]
pub struct IsotropicParams {
    pub dim: usize,
    pub rho: f64,
    pub a: f64,
    pub lambda: f64,
    pub mu: f64,
    pub beta: f64,
    pub delta: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
    pub a5: f64,
    pub m1: f64,
    pub m2: f64,
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
    pub b4: f64,
    pub b5: f64,
    /// Frictional damping coefficient (E = friction · I).
    pub friction: f64,
    /// Kelvin–Voigt viscosity (B form = kelvin_voigt · |∇v|²).
    pub kelvin_voigt: f64,
    pub kappa: f64,
    pub damping_law: LawKind,
    pub damping_p: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LawKind {
    Linear,
    PowerSaturated,
}

impl Default for IsotropicParams {
    fn default() -> Self {
        IsotropicParams {
            dim: 2,
            rho: 1.0,
            a: 1.0,
            lambda: 0.0,
            mu: 0.0,
            beta: 0.0,
            delta: 0.0,
            a1: 0.0,
            a2: 0.0,
            a3: 0.0,
            a4: 0.0,
            a5: 0.0,
            m1: 0.0,
            m2: 0.0,
            b1: 0.0,
            b2: 0.0,
            b3: 0.0,
            b4: 0.0,
            b5: 0.0,
            friction: 0.0,
            kelvin_voigt: 0.0,
            kappa: 0.0,
            damping_law: LawKind::Linear,
            damping_p: 2.0,
        }
    }
}

impl IsotropicParams {
    /// Fills `b1..b5` from `a1..a5`.
    pub fn derive(mut self) -> Self {
        let (a1, a2, a3, a4, a5) = (self.a1, self.a2, self.a3, self.a4, self.a5);
        self.b1 = 2.0 * (a1 + a2 + a3 + a4 + a5);
        self.b2 = 2.0 * (a1 + a2 + 2.0 * a3 + 2.0 * a4 + a5);
        self.b3 = 2.0 * (a3 + a4);
        self.b4 = 2.0 * (a1 + a2 + a5);
        self.b5 = self.b4;
        self
    }

    /// Combined coupling constant `m1 + 2 m2` of the isotropic coupling tensor.
    pub fn coupling(&self) -> f64 {
        self.m1 + 2.0 * self.m2
    }

    /// Antisymmetric shift used in the Lamé tensor; chosen to maximise the
    /// pointwise margin of the gradient form without changing the operator.
    pub fn lame_shift(&self) -> f64 {
        if self.lambda + self.mu >= 0.0 {
            self.mu
        } else {
            -self.lambda
        }
    }
}

pub fn derive_isotropic(params: IsotropicParams) -> IsotropicParams {
    params.derive()
}

/// Builds the full tensor set for an isotropic material.
///
/// The gradient tensor is `λδ_iJ δ_Kj + μδ_ij δ_JK + μδ_iK δ_Jj + t(δ_iJ δ_Kj − δ_iK δ_Jj)`
/// where the `t` term is a null Lagrangian; the sixth-order tensor reproduces
/// `b3 |∇∇u|² + b4 |∇ div u|²`.
pub fn expand_isotropic(params: &IsotropicParams) -> Result<CoefficientSet> {
    let p = params.clone().derive();
    let d = p.dim;
    if d != 1 && d != 2 {
        return Err(LabError::InvalidCoefficients(format!(
            "dimension {d} not supported"
        )));
    }
    let mut set = CoefficientSet::zeros(d, p.rho, p.a);
    let t = p.lame_shift();
    set.a4 = Tensor::from_fn(d, 4, |x| {
        let (i, jj, kk, j) = (x[0], x[1], x[2], x[3]);
        p.lambda * kron(i, jj) * kron(kk, j)
            + p.mu * kron(i, j) * kron(jj, kk)
            + p.mu * kron(i, kk) * kron(jj, j)
            + t * (kron(i, jj) * kron(kk, j) - kron(i, kk) * kron(jj, j))
    });
    let (c1, c2) = (p.b3, p.b4);
    set.c6 = Tensor::from_fn(d, 6, |x| {
        let (i, a, b, c, dd, j) = (x[0], x[1], x[2], x[3], x[4], x[5]);
        c1 * kron(i, j) * kron(a, c) * kron(b, dd) + c2 * kron(i, a) * kron(j, c) * kron(b, dd)
    });
    let cm = p.coupling();
    set.m4 = Tensor::from_fn(d, 4, |x| cm * kron(x[1], x[2]) * kron(x[0], x[3]));
    set.k2 = Tensor::from_fn(d, 2, |x| kron(x[0], x[1]));
    set.beta = Tensor::from_fn(d, 2, |x| p.beta * kron(x[0], x[1]));
    set.m2 = Tensor::from_fn(d, 2, |x| p.delta * kron(x[0], x[1]));
    set.b4 = Tensor::from_fn(d, 4, |x| {
        p.kelvin_voigt * kron(x[0], x[3]) * kron(x[1], x[2])
    });
    set.e2 = Tensor::from_fn(d, 2, |x| p.friction * kron(x[0], x[1]));
    set.kappa = p.kappa;
    set.symmetrize();
    set.validate_shapes()?;
    Ok(set)
}
