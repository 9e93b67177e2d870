//! Symmetric block-tridiagonal matrices and their factorization by block
//! elimination with a dense symmetric-indefinite factorization per Schur
//! block. Inertia is additive over the Schur complements, which gives the
//! exact inertia of the whole matrix.

use nalgebra::DMatrix;

use super::ldlt::{factor_sym_indef, Inertia, SymIndefFactor};

#[derive(Debug, Clone)]
pub struct BlockTridiag {
    sizes: Vec<usize>,
    offsets: Vec<usize>,
    /// Diagonal blocks (full storage, kept symmetric).
    diag: Vec<DMatrix<f64>>,
    /// sub[k] couples block k+1 (rows) with block k (cols).
    sub: Vec<DMatrix<f64>>,
}

impl BlockTridiag {
    pub fn zeros(sizes: &[usize]) -> Self {
        let mut offsets = Vec::with_capacity(sizes.len() + 1);
        let mut at = 0;
        for &s in sizes {
            offsets.push(at);
            at += s;
        }
        offsets.push(at);
        BlockTridiag {
            sizes: sizes.to_vec(),
            offsets,
            diag: sizes.iter().map(|&s| DMatrix::zeros(s, s)).collect(),
            sub: sizes
                .windows(2)
                .map(|w| DMatrix::zeros(w[1], w[0]))
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn n_blocks(&self) -> usize {
        self.sizes.len()
    }

    fn locate(&self, i: usize) -> (usize, usize) {
        let b = match self.offsets.binary_search(&i) {
            Ok(exact) => {
                if exact == self.sizes.len() {
                    exact - 1
                } else {
                    exact
                }
            }
            Err(ins) => ins - 1,
        };
        (b, i - self.offsets[b])
    }

    /// Adds v at (i, j) and, for i != j, at (j, i). Entries must fall on
    /// the block tridiagonal support.
    pub fn add_sym(&mut self, i: usize, j: usize, v: f64) {
        if v == 0.0 {
            return;
        }
        let (bi, li) = self.locate(i);
        let (bj, lj) = self.locate(j);
        match bi.cmp(&bj) {
            std::cmp::Ordering::Equal => {
                self.diag[bi][(li, lj)] += v;
                if li != lj {
                    self.diag[bi][(lj, li)] += v;
                }
            }
            std::cmp::Ordering::Greater => {
                assert!(bi - bj == 1, "entry ({i}, {j}) off the tridiagonal support");
                self.sub[bj][(li, lj)] += v;
            }
            std::cmp::Ordering::Less => {
                assert!(bj - bi == 1, "entry ({i}, {j}) off the tridiagonal support");
                self.sub[bi][(lj, li)] += v;
            }
        }
    }

    /// Adds v to the diagonal entries in [lo, hi).
    pub fn add_diagonal(&mut self, lo: usize, hi: usize, v: f64) {
        for i in lo..hi {
            let (b, l) = self.locate(i);
            self.diag[b][(l, l)] += v;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        debug_assert_eq!(x.len(), n);
        let mut y = vec![0.0; n];
        for (b, d) in self.diag.iter().enumerate() {
            let o = self.offsets[b];
            for r in 0..d.nrows() {
                let mut acc = 0.0;
                for c in 0..d.ncols() {
                    acc += d[(r, c)] * x[o + c];
                }
                y[o + r] += acc;
            }
        }
        for (k, s) in self.sub.iter().enumerate() {
            let (ok, ok1) = (self.offsets[k], self.offsets[k + 1]);
            for r in 0..s.nrows() {
                let mut acc = 0.0;
                for c in 0..s.ncols() {
                    acc += s[(r, c)] * x[ok + c];
                }
                y[ok1 + r] += acc;
            }
            for c in 0..s.ncols() {
                let mut acc = 0.0;
                for r in 0..s.nrows() {
                    acc += s[(r, c)] * x[ok1 + r];
                }
                y[ok + c] += acc;
            }
        }
        y
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for (b, d) in self.diag.iter().enumerate() {
            let o = self.offsets[b];
            m.view_mut((o, o), (d.nrows(), d.ncols())).copy_from(d);
        }
        for (k, s) in self.sub.iter().enumerate() {
            let (ok, ok1) = (self.offsets[k], self.offsets[k + 1]);
            m.view_mut((ok1, ok), (s.nrows(), s.ncols())).copy_from(s);
            m.view_mut((ok, ok1), (s.ncols(), s.nrows()))
                .copy_from(&s.transpose());
        }
        m
    }

    /// Block forward elimination. Fails only on a structurally singular
    /// Schur block.
    pub fn factor(&self) -> Result<BlockTriFactor, ()> {
        let nb = self.n_blocks();
        let mut factors = Vec::with_capacity(nb);
        let mut x_blocks = Vec::with_capacity(nb.saturating_sub(1));
        let mut schur = self.diag[0].clone();
        for k in 0..nb {
            let f = factor_sym_indef(&schur);
            if f.is_singular() {
                return Err(());
            }
            if k + 1 < nb {
                // X_k = S_k^{-1} C_k^T, S_{k+1} = D_{k+1} - C_k X_k.
                let ct = self.sub[k].transpose();
                let x = f.solve(&ct);
                schur = &self.diag[k + 1] - &self.sub[k] * &x;
                x_blocks.push(x);
            }
            factors.push(f);
        }
        Ok(BlockTriFactor {
            offsets: self.offsets.clone(),
            sub: self.sub.clone(),
            factors,
            x_blocks,
        })
    }
}

pub struct BlockTriFactor {
    offsets: Vec<usize>,
    sub: Vec<DMatrix<f64>>,
    factors: Vec<SymIndefFactor>,
    x_blocks: Vec<DMatrix<f64>>,
}

impl BlockTriFactor {
    pub fn inertia(&self) -> Inertia {
        let mut total = Inertia {
            positive: 0,
            negative: 0,
            zero: 0,
        };
        for f in &self.factors {
            let i = f.inertia();
            total.positive += i.positive;
            total.negative += i.negative;
            total.zero += i.zero;
        }
        total
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let nb = self.factors.len();
        // Forward: u_k = S_k^{-1} (b_k - C_{k-1} u_{k-1}).
        let mut u: Vec<DMatrix<f64>> = Vec::with_capacity(nb);
        for k in 0..nb {
            let (o, sz) = (self.offsets[k], self.offsets[k + 1] - self.offsets[k]);
            let mut rhs = DMatrix::from_fn(sz, 1, |r, _| b[o + r]);
            if k > 0 {
                rhs -= &self.sub[k - 1] * &u[k - 1];
            }
            self.factors[k].solve_in_place(&mut rhs);
            u.push(rhs);
        }
        // Backward: x_k = u_k - X_k x_{k+1}.
        let mut x = u;
        for k in (0..nb.saturating_sub(1)).rev() {
            let correction = &self.x_blocks[k] * &x[k + 1];
            x[k] -= correction;
        }
        let n = *self.offsets.last().unwrap();
        let mut out = vec![0.0; n];
        for k in 0..nb {
            let o = self.offsets[k];
            for r in 0..x[k].nrows() {
                out[o + r] = x[k][(r, 0)];
            }
        }
        out
    }
}
