//! Uniform grids on (0, π)^d and finite-difference operators evaluated on
//! nodes, edges and cells.
//!
//! Positions are stored in doubled integer coordinates: node `(i, j)` sits at
//! `(2i, 2j)`, the x-edge between `(i, j)` and `(i+1, j)` at `(2i+1, 2j)`, and the
//! cell with lower-left node `(i, j)` at `(2i+1, 2j+1)`.

use std::f64::consts::PI;

use super::sparse::{CsrMatrix, Triplets};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Boundary {
    /// Zero value and zero normal derivative (even reflection).
    Clamped,
    /// Zero value (odd reflection).
    Dirichlet,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Site {
    Nodes,
    Edges(usize),
    Cells,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Deriv {
    Value,
    First(usize),
    Second(usize, usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub dim: usize,
    pub nx: usize,
    pub ny: usize,
    pub hx: f64,
    pub hy: f64,
}

impl Grid {
    /// `n` interior nodes per direction.
    pub fn uniform(dim: usize, n: usize) -> Self {
        assert!(dim == 1 || dim == 2, "dimension must be 1 or 2");
        assert!(n >= 2, "need at least two interior nodes");
        let h = PI / (n + 1) as f64;
        Grid {
            dim,
            nx: n,
            ny: if dim == 2 { n } else { 1 },
            hx: h,
            hy: if dim == 2 { h } else { 1.0 },
        }
    }

    pub fn nodes(&self) -> usize {
        self.nx * self.ny
    }

    /// Quadrature weight of an interior node.
    pub fn weight(&self) -> f64 {
        self.hx * self.hy
    }

    pub fn domain_measure(&self) -> f64 {
        PI.powi(self.dim as i32)
    }

    pub fn h(&self, a: usize) -> f64 {
        if a == 0 {
            self.hx
        } else {
            self.hy
        }
    }

    /// Physical index pair of interior node `k`.
    pub fn node_ij(&self, k: usize) -> (usize, usize) {
        (k % self.nx + 1, k / self.nx + 1)
    }

    pub fn coords(&self, k: usize) -> (f64, f64) {
        let (i, j) = self.node_ij(k);
        (
            i as f64 * self.hx,
            if self.dim == 2 { j as f64 * self.hy } else { 0.0 },
        )
    }

    fn trap(&self, a: usize, i: i64) -> f64 {
        let (n, h) = if a == 0 { (self.nx, self.hx) } else { (self.ny, self.hy) };
        if i == 0 || i == n as i64 + 1 {
            0.5 * h
        } else {
            h
        }
    }

    /// Points of a site in doubled coordinates, with quadrature weights.
    pub fn site_points(&self, site: Site) -> (Vec<(i64, i64)>, Vec<f64>) {
        let (nx, ny) = (self.nx as i64, self.ny as i64);
        let mut pts = Vec::new();
        let mut w = Vec::new();
        if self.dim == 1 {
            match site {
                Site::Nodes => {
                    for i in 0..=nx + 1 {
                        pts.push((2 * i, 0));
                        w.push(self.trap(0, i));
                    }
                }
                Site::Edges(0) | Site::Cells => {
                    for i in 0..=nx {
                        pts.push((2 * i + 1, 0));
                        w.push(self.hx);
                    }
                }
                Site::Edges(_) => panic!("no y-edges in one dimension"),
            }
            return (pts, w);
        }
        match site {
            Site::Nodes => {
                for j in 0..=ny + 1 {
                    for i in 0..=nx + 1 {
                        pts.push((2 * i, 2 * j));
                        w.push(self.trap(0, i) * self.trap(1, j));
                    }
                }
            }
            Site::Edges(0) => {
                for j in 0..=ny + 1 {
                    for i in 0..=nx {
                        pts.push((2 * i + 1, 2 * j));
                        w.push(self.hx * self.trap(1, j));
                    }
                }
            }
            Site::Edges(_) => {
                for j in 0..=ny {
                    for i in 0..=nx + 1 {
                        pts.push((2 * i, 2 * j + 1));
                        w.push(self.trap(0, i) * self.hy);
                    }
                }
            }
            Site::Cells => {
                for j in 0..=ny {
                    for i in 0..=nx {
                        pts.push((2 * i + 1, 2 * j + 1));
                        w.push(self.hx * self.hy);
                    }
                }
            }
        }
        (pts, w)
    }

    /// Interior index and sign for physical node `(i, j)`, after ghost reflection.
    pub fn resolve(&self, bc: Boundary, i: i64, j: i64) -> Option<(usize, f64)> {
        let s = match bc {
            Boundary::Clamped => 1.0,
            Boundary::Dirichlet => -1.0,
        };
        let reflect = |k: i64, n: usize| -> (i64, f64) {
            let last = n as i64 + 1;
            if k < 0 {
                (-k, s)
            } else if k > last {
                (2 * last - k, s)
            } else {
                (k, 1.0)
            }
        };
        let (i, si) = reflect(i, self.nx);
        if i <= 0 || i >= self.nx as i64 + 1 {
            return None;
        }
        if self.dim == 1 {
            return Some((i as usize - 1, si));
        }
        let (j, sj) = reflect(j, self.ny);
        if j <= 0 || j >= self.ny as i64 + 1 {
            return None;
        }
        Some(((j as usize - 1) * self.nx + (i as usize - 1), si * sj))
    }

    /// Stencil in doubled offsets for a derivative evaluated at a point of the given parity.
    fn stencil(&self, d: Deriv, parity: (bool, bool)) -> Vec<((i64, i64), f64)> {
        let unit = |a: usize, k: i64| if a == 0 { (k, 0) } else { (0, k) };
        match d {
            Deriv::Value => vec![((0, 0), 1.0)],
            Deriv::First(a) => {
                let odd = if a == 0 { parity.0 } else { parity.1 };
                let h = self.h(a);
                if odd {
                    vec![(unit(a, 1), 1.0 / h), (unit(a, -1), -1.0 / h)]
                } else {
                    vec![(unit(a, 2), 0.5 / h), (unit(a, -2), -0.5 / h)]
                }
            }
            Deriv::Second(a, b) if a == b => {
                let h2 = self.h(a) * self.h(a);
                vec![
                    (unit(a, 2), 1.0 / h2),
                    ((0, 0), -2.0 / h2),
                    (unit(a, -2), 1.0 / h2),
                ]
            }
            Deriv::Second(_, _) => {
                let k = if parity.0 && parity.1 { 1 } else { 2 };
                let c = if k == 1 {
                    1.0 / (self.hx * self.hy)
                } else {
                    0.25 / (self.hx * self.hy)
                };
                vec![
                    ((k, k), c),
                    ((k, -k), -c),
                    ((-k, k), -c),
                    ((-k, -k), c),
                ]
            }
        }
    }

    /// Operator from interior nodal values to `d` evaluated at every point of `site`.
    pub fn operator(&self, bc: Boundary, d: Deriv, site: Site) -> CsrMatrix {
        let (pts, _) = self.site_points(site);
        let mut t = Triplets::new(pts.len(), self.nodes());
        for (row, &(px, py)) in pts.iter().enumerate() {
            let parity = (px % 2 != 0, py % 2 != 0);
            for ((ox, oy), c) in self.stencil(d, parity) {
                let (qx, qy) = (px + ox, py + oy);
                debug_assert!(qx % 2 == 0 && qy % 2 == 0);
                if let Some((k, s)) = self.resolve(bc, qx / 2, qy / 2) {
                    t.push(row, k, s * c);
                }
            }
        }
        t.build()
    }
}

/// Site on which a product of two derivatives is integrated.
///
/// Matching first derivatives live on edges, matching pure second derivatives
/// on nodes, matching mixed second derivatives on cells, everything else on
/// nodes with centred differences.
pub fn pair_site(l: Deriv, r: Deriv) -> Site {
    match (l, r) {
        (Deriv::First(a), Deriv::First(b)) if a == b => Site::Edges(a),
        (Deriv::Second(a, b), Deriv::Second(c, d))
            if a != b && ((a, b) == (c, d) || (a, b) == (d, c)) =>
        {
            Site::Cells
        }
        _ => Site::Nodes,
    }
}

/// Canonical ordering of a second-derivative pair.
pub fn second(a: usize, b: usize) -> Deriv {
    Deriv::Second(a.min(b), a.max(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clamped_biharmonic_rows() {
        let g = Grid::uniform(1, 6);
        let d2 = g.operator(Boundary::Clamped, Deriv::Value, Site::Nodes);
        assert_eq!(d2.nrows, 8);
        let (_, w) = g.site_points(Site::Nodes);
        let dd = g.operator(Boundary::Clamped, Deriv::Second(0, 0), Site::Nodes);
        let k = CsrMatrix::weighted_gram(&dd, &w, &dd, 1.0).scaled(g.hx.powi(3));
        let row0: Vec<f64> = (0..3).map(|c| k.get(0, c)).collect();
        let row2: Vec<f64> = (0..5).map(|c| k.get(2, c)).collect();
        for (a, b) in row0.iter().zip([7.0, -4.0, 1.0]) {
            assert!((a - b).abs() < 1e-12, "{row0:?}");
        }
        for (a, b) in row2.iter().zip([1.0, -4.0, 6.0, -4.0, 1.0]) {
            assert!((a - b).abs() < 1e-12, "{row2:?}");
        }
    }

    #[test]
    fn dirichlet_ghost_is_odd() {
        let g = Grid::uniform(1, 4);
        assert_eq!(g.resolve(Boundary::Dirichlet, -1, 0), Some((0, -1.0)));
        assert_eq!(g.resolve(Boundary::Clamped, 6, 0), Some((3, 1.0)));
        assert_eq!(g.resolve(Boundary::Clamped, 5, 0), None);
    }
}
