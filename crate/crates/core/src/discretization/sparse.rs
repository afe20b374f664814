//! Compressed sparse row matrices assembled from triplets.

use nalgebra::DMatrix;

#[derive(Clone, Debug, Default)]
pub struct Triplets {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl Triplets {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Triplets {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, r: usize, c: usize, v: f64) {
        debug_assert!(r < self.nrows && c < self.ncols);
        if v != 0.0 {
            self.entries.push((r, c, v));
        }
    }

    /// Adds `scale · m` with its origin at `(r0, c0)`.
    pub fn push_block(&mut self, r0: usize, c0: usize, scale: f64, m: &CsrMatrix) {
        for r in 0..m.nrows {
            for (c, v) in m.row(r) {
                self.push(r0 + r, c0 + c, scale * v);
            }
        }
    }

    pub fn build(mut self) -> CsrMatrix {
        self.entries
            .sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut indptr = vec![0usize; self.nrows + 1];
        let mut indices = Vec::with_capacity(self.entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in self.entries {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                values.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..self.nrows {
            indptr[r + 1] += indptr[r];
        }
        CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            indptr,
            indices,
            values,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    pub nrows: usize,
    pub ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Triplets::new(nrows, ncols).build()
    }

    pub fn identity(n: usize) -> Self {
        let mut t = Triplets::new(n, n);
        for i in 0..n {
            t.push(i, i, 1.0);
        }
        t.build()
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let mut t = Triplets::new(d.len(), d.len());
        for (i, v) in d.iter().enumerate() {
            t.push(i, i, *v);
        }
        t.build()
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (a, b) = (self.indptr[r], self.indptr[r + 1]);
        self.indices[a..b]
            .iter()
            .copied()
            .zip(self.values[a..b].iter().copied())
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (a, b) = (self.indptr[r], self.indptr[r + 1]);
        match self.indices[a..b].binary_search(&c) {
            Ok(k) => self.values[a + k],
            Err(_) => 0.0,
        }
    }

    /// `y += alpha · A x`.
    pub fn mul_add(&self, alpha: f64, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        for (r, yr) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for (c, v) in self.row(r) {
                s += v * x[c];
            }
            *yr += alpha * s;
        }
    }

    /// `y += alpha · Aᵀ x`.
    pub fn mul_t_add(&self, alpha: f64, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.nrows);
        debug_assert_eq!(y.len(), self.ncols);
        for (r, xr) in x.iter().enumerate() {
            let s = alpha * xr;
            if s != 0.0 {
                for (c, v) in self.row(r) {
                    y[c] += v * s;
                }
            }
        }
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.mul_add(1.0, x, &mut y);
        y
    }

    /// `xᵀ A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (r, xr) in x.iter().enumerate() {
            if *xr != 0.0 {
                let mut s = 0.0;
                for (c, v) in self.row(r) {
                    s += v * y[c];
                }
                acc += xr * s;
            }
        }
        acc
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut t = Triplets::new(self.ncols, self.nrows);
        for (r, c, v) in self.iter() {
            t.push(c, r, v);
        }
        t.build()
    }

    pub fn scaled(&self, s: f64) -> CsrMatrix {
        let mut m = self.clone();
        for v in &mut m.values {
            *v *= s;
        }
        m
    }

    /// `Aᵀ diag(w) B` for matrices with the same row space.
    pub fn weighted_gram(a: &CsrMatrix, w: &[f64], b: &CsrMatrix, scale: f64) -> CsrMatrix {
        let mut t = Triplets::new(a.ncols, b.ncols);
        for r in 0..a.nrows {
            let wr = scale * w[r];
            if wr == 0.0 {
                continue;
            }
            for (c1, v1) in a.row(r) {
                for (c2, v2) in b.row(r) {
                    t.push(c1, c2, wr * v1 * v2);
                }
            }
        }
        t.build()
    }

    pub fn add(&self, other: &CsrMatrix, scale: f64) -> CsrMatrix {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let mut t = Triplets::new(self.nrows, self.ncols);
        t.push_block(0, 0, 1.0, self);
        t.push_block(0, 0, scale, other);
        t.build()
    }

    /// Largest `|A_rc − A_cr|`.
    pub fn asymmetry(&self) -> f64 {
        self.iter()
            .map(|(r, c, v)| (v - self.get(c, r)).abs())
            .fold(0.0, f64::max)
    }

    /// Largest `|A_rc + A_cr|`.
    pub fn skew_defect(&self) -> f64 {
        self.iter()
            .map(|(r, c, v)| (v + self.get(c, r)).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for (r, c, v) in self.iter() {
            m[(r, c)] += v;
        }
        m
    }
}
