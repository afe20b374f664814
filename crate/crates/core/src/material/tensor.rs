//! Dense Cartesian tensors of small rank over a 1- or 2-dimensional index range.

use std::collections::BTreeSet;

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    dim: usize,
    rank: usize,
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(dim: usize, rank: usize) -> Self {
        Tensor {
            dim,
            rank,
            data: vec![0.0; dim.pow(rank as u32)],
        }
    }

    pub fn from_fn(dim: usize, rank: usize, f: impl Fn(&[usize]) -> f64) -> Self {
        let mut t = Tensor::zeros(dim, rank);
        for (k, idx) in MultiIndex::new(dim, rank).enumerate() {
            t.data[k] = f(&idx);
        }
        t
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank);
        idx.iter().fold(0, |acc, &i| {
            debug_assert!(i < self.dim);
            acc * self.dim + i
        })
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: f64) {
        let o = self.offset(idx);
        self.data[o] = v;
    }

    /// Nonzero entries with their multi-indices.
    pub fn entries(&self) -> impl Iterator<Item = (Vec<usize>, f64)> + '_ {
        MultiIndex::new(self.dim, self.rank)
            .zip(self.data.iter().copied())
            .filter(|(_, v)| *v != 0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| *v == 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, s: f64) -> Tensor {
        Tensor {
            dim: self.dim,
            rank: self.rank,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    /// Averages over the permutation group generated by `generators`.
    ///
    /// A generator `p` maps a tensor to `T'[idx] = T[idx ∘ p]`, i.e. slot `k` of the
    /// permuted index reads slot `p[k]` of the original.
    pub fn symmetrized(&self, generators: &[&[usize]]) -> Tensor {
        let group = permutation_closure(self.rank, generators);
        let n = group.len() as f64;
        Tensor::from_fn(self.dim, self.rank, |idx| {
            let mut acc = 0.0;
            let mut buf = vec![0usize; self.rank];
            for p in &group {
                for k in 0..self.rank {
                    buf[k] = idx[p[k]];
                }
                acc += self.get(&buf);
            }
            acc / n
        })
    }

    /// Largest deviation from invariance under the given generators.
    pub fn asymmetry(&self, generators: &[&[usize]]) -> f64 {
        let mut worst: f64 = 0.0;
        let mut buf = vec![0usize; self.rank];
        for idx in MultiIndex::new(self.dim, self.rank) {
            for p in generators {
                for k in 0..self.rank {
                    buf[k] = idx[p[k]];
                }
                worst = worst.max((self.get(&idx) - self.get(&buf)).abs());
            }
        }
        worst
    }
}

fn permutation_closure(rank: usize, generators: &[&[usize]]) -> Vec<Vec<usize>> {
    let identity: Vec<usize> = (0..rank).collect();
    let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
    seen.insert(identity.clone());
    let mut frontier = vec![identity];
    while let Some(p) = frontier.pop() {
        for g in generators {
            let composed: Vec<usize> = (0..rank).map(|k| p[g[k]]).collect();
            if seen.insert(composed.clone()) {
                frontier.push(composed);
            }
        }
    }
    seen.into_iter().collect()
}

/// Row-major iteration over all multi-indices of a given rank.
pub struct MultiIndex {
    dim: usize,
    cur: Option<Vec<usize>>,
}

impl MultiIndex {
    pub fn new(dim: usize, rank: usize) -> Self {
        MultiIndex {
            dim,
            cur: if dim == 0 { None } else { Some(vec![0; rank]) },
        }
    }
}

impl Iterator for MultiIndex {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.cur.clone()?;
        let mut next = out.clone();
        let mut k = next.len();
        loop {
            if k == 0 {
                self.cur = None;
                break;
            }
            k -= 1;
            next[k] += 1;
            if next[k] < self.dim {
                self.cur = Some(next);
                break;
            }
            next[k] = 0;
        }
        Some(out)
    }
}

pub fn kron(i: usize, j: usize) -> f64 {
    if i == j {
        1.0
    } else {
        0.0
    }
}

/// Major symmetry of a rank-4 elasticity-type tensor: `T[i][J][K][j] = T[j][K][J][i]`.
pub const MAJOR4: &[usize] = &[3, 2, 1, 0];
/// Symmetry of a rank-2 tensor.
pub const SWAP2: &[usize] = &[1, 0];
/// Hessian-slot symmetry of the sixth-order tensor, first pair.
pub const C6_LEFT: &[usize] = &[0, 2, 1, 3, 4, 5];
/// Hessian-slot symmetry of the sixth-order tensor, second pair.
pub const C6_RIGHT: &[usize] = &[0, 1, 2, 4, 3, 5];
/// Major symmetry of the sixth-order tensor: `C[i][a][b][c][d][j] = C[j][c][d][a][b][i]`.
pub const C6_MAJOR: &[usize] = &[5, 3, 4, 1, 2, 0];
/// Hessian-slot symmetry of the coupling tensor `M[i][J][K][L]`.
pub const M4_HESS: &[usize] = &[0, 2, 1, 3];
