//! Banded LU factorisation with partial pivoting.

use super::sparse::CsrMatrix;
use crate::error::{LabError, Result};

#[derive(Clone, Debug)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    /// Row `i` stores columns `i - kl ..= i + kl + ku`.
    width: usize,
    data: Vec<f64>,
    piv: Vec<usize>,
}

impl BandedLu {
    /// Factorises a square sparse matrix whose entries lie within the detected band.
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        assert_eq!(a.nrows, a.ncols, "banded factorisation needs a square matrix");
        let n = a.nrows;
        let (mut kl, mut ku) = (0usize, 0usize);
        for (r, c, _) in a.iter() {
            if c < r {
                kl = kl.max(r - c);
            } else {
                ku = ku.max(c - r);
            }
        }
        let width = 2 * kl + ku + 1;
        let mut lu = BandedLu {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
            piv: vec![0; n],
        };
        for (r, c, v) in a.iter() {
            let s = lu.slot(r, c);
            lu.data[s] += v;
        }
        let scale = a.max_abs();
        lu.decompose(scale)?;
        Ok(lu)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    #[inline]
    fn slot(&self, r: usize, c: usize) -> usize {
        debug_assert!(c + self.kl >= r && c <= r + self.kl + self.ku);
        r * self.width + (c + self.kl - r)
    }

    fn decompose(&mut self, scale: f64) -> Result<()> {
        let n = self.n;
        let reach = self.kl + self.ku;
        for k in 0..n {
            let last = (k + self.kl).min(n - 1);
            let mut p = k;
            let mut best = self.data[self.slot(k, k)].abs();
            for r in k + 1..=last {
                let v = self.data[self.slot(r, k)].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if !(best > scale * 1e-14) || best == 0.0 {
                return Err(LabError::SolveFailure(format!(
                    "zero pivot in column {k} of {n}"
                )));
            }
            self.piv[k] = p;
            let cmax = (k + reach).min(n - 1);
            if p != k {
                for c in k..=cmax {
                    let (sa, sb) = (self.slot(k, c), self.slot(p, c));
                    self.data.swap(sa, sb);
                }
            }
            let pivot = self.data[self.slot(k, k)];
            for r in k + 1..=last {
                let sr = self.slot(r, k);
                let l = self.data[sr] / pivot;
                self.data[sr] = l;
                if l != 0.0 {
                    let rk = k * self.width + self.kl - k;
                    let rr = r * self.width + self.kl - r;
                    for c in k + 1..=cmax {
                        let v = self.data[rk + c];
                        self.data[rr + c] -= l * v;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        assert_eq!(b.len(), n);
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            if bk != 0.0 {
                let last = (k + self.kl).min(n - 1);
                for r in k + 1..=last {
                    b[r] -= self.data[self.slot(r, k)] * bk;
                }
            }
        }
        let reach = self.kl + self.ku;
        for k in (0..n).rev() {
            let cmax = (k + reach).min(n - 1);
            let mut s = b[k];
            for c in k + 1..=cmax {
                s -= self.data[self.slot(k, c)] * b[c];
            }
            b[k] = s / self.data[self.slot(k, k)];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}
