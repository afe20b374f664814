use std::collections::HashMap;
use std::ops::Range;

use super::grid::{pair_site, second, Boundary, Deriv, Grid, Site};
use super::sparse::{CsrMatrix, Triplets};
use crate::envelope::{validate_damping, DampingLaw};
use crate::error::{LabError, Result};
use crate::material::{check_positivity, CoefficientSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    KelvinVoigt,
    Frictional,
    Cattaneo,
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::KelvinVoigt => "kelvin-voigt",
            Variant::Frictional => "frictional",
            Variant::Cattaneo => "cattaneo",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kelvin-voigt" | "kv" => Ok(Variant::KelvinVoigt),
            "frictional" => Ok(Variant::Frictional),
            "cattaneo" => Ok(Variant::Cattaneo),
            _ => Err(LabError::InvalidInput(format!(
                "unknown variant `{s}` (expected kelvin-voigt, frictional or cattaneo)"
            ))),
        }
    }
}

/// Index layout of the flat state: `u_1..u_d, τ, v_1..v_d, θ, q`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Layout {
    pub dim: usize,
    pub nodes: usize,
    pub nq: usize,
}

impl Layout {
    pub fn npos(&self) -> usize {
        (self.dim + 1) * self.nodes
    }

    pub fn len(&self) -> usize {
        2 * self.npos() + self.nq
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn pos(&self) -> Range<usize> {
        0..self.npos()
    }

    pub fn vel(&self) -> Range<usize> {
        self.npos()..2 * self.npos()
    }

    pub fn q(&self) -> Range<usize> {
        2 * self.npos()..self.len()
    }

    pub fn u(&self, i: usize) -> Range<usize> {
        i * self.nodes..(i + 1) * self.nodes
    }

    pub fn tau(&self) -> Range<usize> {
        self.dim * self.nodes..self.npos()
    }

    pub fn v(&self, i: usize) -> Range<usize> {
        let o = self.npos();
        o + i * self.nodes..o + (i + 1) * self.nodes
    }

    pub fn theta(&self) -> Range<usize> {
        let o = self.npos();
        o + self.dim * self.nodes..2 * o
    }

    /// Position of vel-space index `k` in node-interleaved order.
    pub fn interleave(&self, k: usize) -> usize {
        let (c, node) = (k / self.nodes, k % self.nodes);
        node * (self.dim + 1) + c
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    pub layout: Layout,
    pub data: Vec<f64>,
}

impl StateVector {
    pub fn zeros(layout: Layout) -> Self {
        StateVector {
            layout,
            data: vec![0.0; layout.len()],
        }
    }

    pub fn pos(&self) -> &[f64] {
        &self.data[self.layout.pos()]
    }

    pub fn vel(&self) -> &[f64] {
        &self.data[self.layout.vel()]
    }

    pub fn q(&self) -> &[f64] {
        &self.data[self.layout.q()]
    }
}

/// Staggered heat-flux block of the Cattaneo variant.
#[derive(Clone, Debug)]
pub struct FluxBlock {
    /// `diag(c) D⁺`, rows are flux edges, columns are interior nodes.
    pub h: CsrMatrix,
    /// Per-edge `m_aa · w_edge`.
    pub c: Vec<f64>,
    /// Per-edge quadrature weight.
    pub w: Vec<f64>,
}

/// Semi-discrete generator written as `M ẋ = (J − R) x − N(x)`.
#[derive(Clone, Debug)]
pub struct SemiDiscreteSystem {
    pub grid: Grid,
    pub variant: Variant,
    pub layout: Layout,
    pub coeffs: CoefficientSet,
    /// Potential form on `(u, τ)`.
    pub stiffness: CsrMatrix,
    /// Skew velocity coupling (thermal expansion).
    pub vel_skew: CsrMatrix,
    /// Symmetric velocity damping.
    pub vel_damp: CsrMatrix,
    pub flux: Option<FluxBlock>,
    /// Velocity damping law of the Cattaneo variant.
    pub law: Option<DampingLaw>,
}

struct OpCache<'g> {
    grid: &'g Grid,
    ops: HashMap<(Boundary, Deriv, Site), CsrMatrix>,
    weights: HashMap<Site, Vec<f64>>,
}

impl<'g> OpCache<'g> {
    fn new(grid: &'g Grid) -> Self {
        OpCache {
            grid,
            ops: HashMap::new(),
            weights: HashMap::new(),
        }
    }

    fn op(&mut self, bc: Boundary, d: Deriv, site: Site) -> CsrMatrix {
        let g = self.grid;
        self.ops
            .entry((bc, d, site))
            .or_insert_with(|| g.operator(bc, d, site))
            .clone()
    }

    fn weights(&mut self, site: Site) -> Vec<f64> {
        let g = self.grid;
        self.weights
            .entry(site)
            .or_insert_with(|| g.site_points(site).1)
            .clone()
    }

    /// Adds `c ⟨D_l f_l, D_r f_r⟩` into the block `(row_field, col_field)`.
    #[allow(clippy::too_many_arguments)]
    fn add(
        &mut self,
        t: &mut Triplets,
        nodes: usize,
        row_field: usize,
        col_field: usize,
        c: f64,
        (bl, dl): (Boundary, Deriv),
        (br, dr): (Boundary, Deriv),
    ) {
        if c == 0.0 {
            return;
        }
        let site = pair_site(dl, dr);
        let w = self.weights(site);
        let l = self.op(bl, dl, site);
        let r = self.op(br, dr, site);
        let m = CsrMatrix::weighted_gram(&l, &w, &r, c);
        t.push_block(row_field * nodes, col_field * nodes, 1.0, &m);
    }
}

const U_BC: Boundary = Boundary::Clamped;
const T_BC: Boundary = Boundary::Dirichlet;

pub fn assemble(
    grid: &Grid,
    coeffs: &CoefficientSet,
    variant: Variant,
    law: Option<DampingLaw>,
) -> Result<SemiDiscreteSystem> {
    coeffs.validate_shapes()?;
    if coeffs.dim != grid.dim {
        return Err(LabError::InvalidCoefficients(format!(
            "coefficient dimension {} does not match grid dimension {}",
            coeffs.dim, grid.dim
        )));
    }
    let report = check_positivity(coeffs);
    if !report.semidefinite_elastic() {
        return Err(LabError::InvalidCoefficients(format!(
            "positivity fails: rho = {}, a = {}, joint min eig = {:e}, gradient min eig = {:e}",
            report.rho, report.a, report.joint_min_eig, report.gradient_min_eig
        )));
    }
    let d = grid.dim;
    let nodes = grid.nodes();
    let law = match variant {
        Variant::KelvinVoigt | Variant::Frictional => {
            if !(report.b_psd() && report.m_psd() && report.e_psd()) {
                return Err(LabError::InvalidCoefficients(
                    "damping tensors B, m, E must be positive semidefinite".into(),
                ));
            }
            None
        }
        Variant::Cattaneo => {
            if !(coeffs.kappa > 0.0) {
                return Err(LabError::InvalidCoefficients(
                    "Cattaneo variant needs kappa > 0".into(),
                ));
            }
            if !coeffs.m2_is_positive_diagonal() {
                return Err(LabError::InvalidCoefficients(
                    "Cattaneo variant needs a diagonal, positive heat tensor m".into(),
                ));
            }
            let law = law.ok_or_else(|| {
                LabError::InvalidCoefficients("Cattaneo variant needs a damping law".into())
            })?;
            let v = validate_damping(&law);
            if !v.passed() {
                return Err(LabError::InvalidCoefficients(format!(
                    "damping law fails checks: {:?}",
                    v.failed()
                )));
            }
            Some(law)
        }
    };

    let mut cache = OpCache::new(grid);
    let npos = (d + 1) * nodes;

    let mut st = Triplets::new(npos, npos);
    for (x, val) in coeffs.a4.entries() {
        let (i, jj, kk, j) = (x[0], x[1], x[2], x[3]);
        cache.add(&mut st, nodes, i, j, val, (U_BC, Deriv::First(jj)), (U_BC, Deriv::First(kk)));
    }
    for (x, val) in coeffs.c6.entries() {
        let (i, a, b, c, dd, j) = (x[0], x[1], x[2], x[3], x[4], x[5]);
        cache.add(&mut st, nodes, i, j, val, (U_BC, second(a, b)), (U_BC, second(c, dd)));
    }
    for (x, val) in coeffs.m4.entries() {
        let (i, jj, kk, l) = (x[0], x[1], x[2], x[3]);
        cache.add(&mut st, nodes, i, d, val, (U_BC, second(jj, kk)), (T_BC, Deriv::First(l)));
        cache.add(&mut st, nodes, d, i, val, (T_BC, Deriv::First(l)), (U_BC, second(jj, kk)));
    }
    for (x, val) in coeffs.k2.entries() {
        cache.add(&mut st, nodes, d, d, val, (T_BC, Deriv::First(x[0])), (T_BC, Deriv::First(x[1])));
    }
    let stiffness = symmetrize(st.build());

    let mut sk = Triplets::new(npos, npos);
    for (x, val) in coeffs.beta.entries() {
        let (jj, i) = (x[0], x[1]);
        cache.add(&mut sk, nodes, i, d, -val, (U_BC, Deriv::Value), (T_BC, Deriv::First(jj)));
        cache.add(&mut sk, nodes, d, i, val, (T_BC, Deriv::First(jj)), (U_BC, Deriv::Value));
    }
    let vel_skew = sk.build();

    let mut dm = Triplets::new(npos, npos);
    let mut flux = None;
    match variant {
        Variant::KelvinVoigt | Variant::Frictional => {
            for (x, val) in coeffs.b4.entries() {
                let (i, jj, kk, j) = (x[0], x[1], x[2], x[3]);
                cache.add(&mut dm, nodes, i, j, val, (U_BC, Deriv::First(jj)), (U_BC, Deriv::First(kk)));
            }
            for (x, val) in coeffs.e2.entries() {
                cache.add(&mut dm, nodes, x[0], x[1], val, (U_BC, Deriv::Value), (U_BC, Deriv::Value));
            }
            for (x, val) in coeffs.m2.entries() {
                cache.add(&mut dm, nodes, d, d, val, (T_BC, Deriv::First(x[0])), (T_BC, Deriv::First(x[1])));
            }
        }
        Variant::Cattaneo => {
            let law = law.as_ref().expect("validated above");
            if law.is_linear() {
                for i in 0..d {
                    cache.add(&mut dm, nodes, i, i, law.alpha, (U_BC, Deriv::Value), (U_BC, Deriv::Value));
                }
            }
            flux = Some(flux_block(grid, coeffs));
        }
    }
    let vel_damp = symmetrize(dm.build());

    let nq = flux.as_ref().map_or(0, |f| f.c.len());
    Ok(SemiDiscreteSystem {
        grid: grid.clone(),
        variant,
        layout: Layout { dim: d, nodes, nq },
        coeffs: coeffs.clone(),
        stiffness,
        vel_skew,
        vel_damp,
        flux,
        law,
    })
}

fn symmetrize(m: CsrMatrix) -> CsrMatrix {
    m.add(&m.transpose(), 1.0).scaled(0.5)
}

/// Flux unknowns sit on edges whose transverse coordinate is interior.
fn flux_block(grid: &Grid, coeffs: &CoefficientSet) -> FluxBlock {
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut c = Vec::new();
    let mut w = Vec::new();
    let (nx, ny) = (grid.nx as i64, grid.ny as i64);
    let wq = grid.weight();
    for a in 0..grid.dim {
        let m = coeffs.m2.get(&[a, a]);
        let h = grid.h(a);
        let (ilim, jlim) = if a == 0 { (nx + 1, ny) } else { (nx, ny + 1) };
        let j_range = if grid.dim == 1 { 0..=0 } else if a == 0 { 1..=jlim } else { 0..=jlim - 1 };
        for j in j_range {
            let i_range = if a == 0 { 0..=ilim - 1 } else { 1..=ilim };
            for i in i_range {
                // edge between node (i, j) and (i, j) + e_a
                let (i2, j2) = if a == 0 { (i + 1, j) } else { (i, j + 1) };
                let jj = if grid.dim == 1 { 0 } else { j };
                let jj2 = if grid.dim == 1 { 0 } else { j2 };
                let mut row = Vec::new();
                if let Some((k, s)) = grid.resolve(T_BC, i2, jj2) {
                    row.push((k, s * m * wq / h));
                }
                if let Some((k, s)) = grid.resolve(T_BC, i, jj) {
                    row.push((k, -s * m * wq / h));
                }
                rows.push(row);
                c.push(m * wq);
                w.push(wq);
            }
        }
    }
    let mut t = Triplets::new(rows.len(), grid.nodes());
    for (r, row) in rows.iter().enumerate() {
        for &(k, v) in row {
            t.push(r, k, v);
        }
    }
    FluxBlock { h: t.build(), c, w }
}

impl SemiDiscreteSystem {
    pub fn dim(&self) -> usize {
        self.grid.dim
    }

    pub fn weight(&self) -> f64 {
        self.grid.weight()
    }

    pub fn zero_state(&self) -> StateVector {
        StateVector::zeros(self.layout)
    }

    /// Diagonal of the velocity-space mass (`ρ w` on v, `a w` on θ).
    pub fn vel_mass(&self) -> Vec<f64> {
        let w = self.weight();
        let l = self.layout;
        let mut m = vec![self.coeffs.rho * w; l.npos()];
        for k in l.tau() {
            m[k] = self.coeffs.a * w;
        }
        m
    }

    /// Diagonal of the flux mass `κ m w`.
    pub fn flux_mass(&self) -> Vec<f64> {
        self.flux
            .as_ref()
            .map(|f| f.c.iter().map(|c| self.coeffs.kappa * c).collect())
            .unwrap_or_default()
    }

    pub fn has_nonlinear_damping(&self) -> bool {
        self.law.as_ref().is_some_and(|l| !l.is_linear())
    }

    /// Total energy of a state.
    pub fn energy(&self, x: &[f64]) -> f64 {
        let l = self.layout;
        let pos = &x[l.pos()];
        let vel = &x[l.vel()];
        let mut e = self.stiffness.bilinear(pos, pos);
        e += self.vel_mass().iter().zip(vel).map(|(m, v)| m * v * v).sum::<f64>();
        e += self.flux_mass().iter().zip(&x[l.q()]).map(|(m, q)| m * q * q).sum::<f64>();
        0.5 * e
    }

    /// Nodal speeds `|v|` at interior nodes.
    pub fn speeds(&self, vel: &[f64]) -> Vec<f64> {
        let l = self.layout;
        (0..l.nodes)
            .map(|k| {
                (0..l.dim)
                    .map(|i| vel[i * l.nodes + k].powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .collect()
    }

    /// Dissipation rate `-dE/dt` at a state.
    pub fn dissipation(&self, x: &[f64]) -> f64 {
        let l = self.layout;
        let vel = &x[l.vel()];
        let mut d = self.vel_damp.bilinear(vel, vel);
        if let Some(f) = &self.flux {
            d += f.c.iter().zip(&x[l.q()]).map(|(c, q)| c * q * q).sum::<f64>();
        }
        if self.has_nonlinear_damping() {
            let law = self.law.as_ref().unwrap();
            let w = self.weight();
            d += self
                .speeds(vel)
                .iter()
                .map(|&s| w * law.eval(s) * s * s)
                .sum::<f64>();
        }
        d
    }

    /// Integrand `∫ (E(|v|)²|v|² + |v|² + |q|²)` of the observation functional.
    pub fn observed_density(&self, x: &[f64]) -> f64 {
        let l = self.layout;
        let w = self.weight();
        let e = |s: f64| match &self.law {
            Some(law) => law.eval(s),
            None => 0.0,
        };
        let mut acc: f64 = self
            .speeds(&x[l.vel()])
            .iter()
            .map(|&s| w * (e(s) * e(s) + 1.0) * s * s)
            .sum();
        if let Some(f) = &self.flux {
            acc += f.w.iter().zip(&x[l.q()]).map(|(w, q)| w * q * q).sum::<f64>();
        }
        acc
    }

    /// Nonlinear velocity force `w E(|v|) v` on the v rows of vel-space.
    pub fn nonlinear_force(&self, vel: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        if !self.has_nonlinear_damping() {
            return;
        }
        let l = self.layout;
        let law = self.law.as_ref().unwrap();
        let w = self.weight();
        for (k, s) in self.speeds(vel).into_iter().enumerate() {
            let e = law.eval(s);
            for i in 0..l.dim {
                let idx = i * l.nodes + k;
                out[idx] = w * e * vel[idx];
            }
        }
    }

    /// `M⁻¹ J x`.
    pub fn apply_conservative(&self, x: &[f64]) -> Vec<f64> {
        let l = self.layout;
        let mut y = vec![0.0; l.len()];
        y[l.pos()].copy_from_slice(&x[l.vel()]);
        let mut f = vec![0.0; l.npos()];
        self.stiffness.mul_add(-1.0, &x[l.pos()], &mut f);
        self.vel_skew.mul_add(1.0, &x[l.vel()], &mut f);
        if let Some(fl) = &self.flux {
            let th = l.tau();
            fl.h.mul_t_add(-1.0, &x[l.q()], &mut f[th]);
            let mut g = vec![0.0; l.nq];
            fl.h.mul_add(1.0, &x[l.theta()], &mut g);
            for (k, (gk, m)) in g.iter().zip(self.flux_mass()).enumerate() {
                y[l.q().start + k] = gk / m;
            }
        }
        for (k, (fk, m)) in f.iter().zip(self.vel_mass()).enumerate() {
            y[l.npos() + k] = fk / m;
        }
        y
    }

    /// `M⁻¹ R x` (linear damping only).
    pub fn apply_damping(&self, x: &[f64]) -> Vec<f64> {
        let l = self.layout;
        let mut y = vec![0.0; l.len()];
        let mut f = vec![0.0; l.npos()];
        self.vel_damp.mul_add(1.0, &x[l.vel()], &mut f);
        for (k, (fk, m)) in f.iter().zip(self.vel_mass()).enumerate() {
            y[l.npos() + k] = fk / m;
        }
        if self.flux.is_some() {
            for k in l.q() {
                y[k] = x[k] / self.coeffs.kappa;
            }
        }
        y
    }

    /// Energy inner product `⟨x, y⟩_M`.
    pub fn energy_inner(&self, x: &[f64], y: &[f64]) -> f64 {
        let l = self.layout;
        let mut e = self.stiffness.bilinear(&x[l.pos()], &y[l.pos()]);
        e += self
            .vel_mass()
            .iter()
            .zip(&x[l.vel()])
            .zip(&y[l.vel()])
            .map(|((m, a), b)| m * a * b)
            .sum::<f64>();
        e += self
            .flux_mass()
            .iter()
            .zip(&x[l.q()])
            .zip(&y[l.q()])
            .map(|((m, a), b)| m * a * b)
            .sum::<f64>();
        e
    }

    /// Full sparse `(J, R, M)` in the flat layout.
    pub fn full_blocks(&self) -> (CsrMatrix, CsrMatrix, CsrMatrix) {
        let l = self.layout;
        let (n, p) = (l.len(), l.npos());
        let mut j = Triplets::new(n, n);
        let mut r = Triplets::new(n, n);
        let mut m = Triplets::new(n, n);
        j.push_block(0, p, 1.0, &self.stiffness);
        j.push_block(p, 0, -1.0, &self.stiffness);
        j.push_block(p, p, 1.0, &self.vel_skew);
        r.push_block(p, p, 1.0, &self.vel_damp);
        m.push_block(0, 0, 1.0, &self.stiffness);
        for (k, v) in self.vel_mass().into_iter().enumerate() {
            m.push(p + k, p + k, v);
        }
        if let Some(f) = &self.flux {
            let q0 = l.q().start;
            let th0 = l.theta().start;
            j.push_block(q0, th0, 1.0, &f.h);
            j.push_block(th0, q0, -1.0, &f.h.transpose());
            for (k, c) in f.c.iter().enumerate() {
                r.push(q0 + k, q0 + k, *c);
                m.push(q0 + k, q0 + k, self.coeffs.kappa * c);
            }
        }
        (j.build(), r.build(), m.build())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::material::{expand_isotropic, IsotropicParams};

    fn params(dim: usize) -> IsotropicParams {
        IsotropicParams {
            dim,
            lambda: 1.0,
            mu: 1.0,
            beta: 1.0,
            delta: 1.0,
            a3: 0.5,
            a4: 0.5,
            m1: 0.1,
            kappa: 0.5,
            friction: 1.0,
            ..Default::default()
        }
    }

    #[test]
    fn zero_operator_shift_blocks() {
        let c = CoefficientSet::zeros(1, 1.0, 1.0);
        let s = assemble(&Grid::uniform(1, 5), &c, Variant::KelvinVoigt, None).unwrap();
        let mut x = vec![0.0; s.layout.len()];
        for (k, v) in x.iter_mut().enumerate() {
            *v = k as f64 + 1.0;
        }
        let y = s.apply_conservative(&x);
        assert_eq!(&y[s.layout.pos()], &x[s.layout.vel()]);
        assert!(y[s.layout.vel()].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn generator_skew_in_energy_product() {
        for dim in [1, 2] {
            for variant in [Variant::KelvinVoigt, Variant::Cattaneo] {
                let c = expand_isotropic(&params(dim)).unwrap();
                let g = Grid::uniform(dim, 6);
                let law = Some(DampingLaw::linear(1.0));
                let s = assemble(&g, &c, variant, law).unwrap();
                let x: Vec<f64> = (0..s.layout.len()).map(|k| ((k * 37 % 11) as f64 - 5.0) / 3.0).collect();
                let lx = s.apply_conservative(&x);
                let ip = s.energy_inner(&lx, &x);
                let scale = s.energy_inner(&lx, &lx).sqrt() * s.energy_inner(&x, &x).sqrt();
                assert!(ip.abs() <= 1e-12 * scale, "{dim} {variant:?}: {ip:e}");
                let dx = s.apply_damping(&x);
                assert!(s.energy_inner(&dx, &x) >= -1e-12 * scale);
            }
        }
    }

    #[test]
    fn stiffness_symmetric() {
        let c = expand_isotropic(&params(2)).unwrap();
        let s = assemble(&Grid::uniform(2, 5), &c, Variant::KelvinVoigt, None).unwrap();
        assert!(s.stiffness.asymmetry() < 1e-9 * s.stiffness.max_abs());
    }
}
