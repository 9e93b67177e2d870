//! Problem interface consumed by the solver: callbacks for the objective,
//! the equality block, the two-sided inequality block and the combined
//! Lagrangian curvature, plus a block layout so multi-period instances
//! factor in linear time.

use super::blocktri::BlockTridiag;

/// (row, col, value) entries of a constraint Jacobian; rows must be
/// grouped (nondecreasing).
pub type Triplets = Vec<(usize, usize, f64)>;

/// KKT layout: variables and equality rows assigned to consecutive blocks
/// (periods). Constraints may couple variables of adjacent blocks only.
/// A single block describes an unstructured dense problem.
#[derive(Debug, Clone)]
pub struct KktStructure {
    pub var_blocks: Vec<usize>,
    pub eq_blocks: Vec<usize>,
}

impl KktStructure {
    pub fn dense(n_vars: usize, n_eq: usize) -> Self {
        KktStructure {
            var_blocks: vec![n_vars],
            eq_blocks: vec![n_eq],
        }
    }

    pub fn n_vars(&self) -> usize {
        self.var_blocks.iter().sum()
    }

    pub fn n_eq(&self) -> usize {
        self.eq_blocks.iter().sum()
    }

    /// Sizes of the interleaved [vars_k; eqs_k] superblocks.
    pub fn superblock_sizes(&self) -> Vec<usize> {
        self.var_blocks
            .iter()
            .zip(&self.eq_blocks)
            .map(|(v, e)| v + e)
            .collect()
    }

    /// Global KKT index of each decision variable.
    pub fn var_index(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.n_vars());
        let mut base = 0;
        for (b, &nv) in self.var_blocks.iter().enumerate() {
            for l in 0..nv {
                out.push(base + l);
            }
            base += nv + self.eq_blocks[b];
        }
        out
    }

    /// Global KKT index of each equality multiplier.
    pub fn eq_index(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.n_eq());
        let mut base = 0;
        for (b, &nv) in self.var_blocks.iter().enumerate() {
            for l in 0..self.eq_blocks[b] {
                out.push(base + nv + l);
            }
            base += nv + self.eq_blocks[b];
        }
        out
    }
}

/// Smooth NLP with equality constraints and two-sided inequalities
///   minimize F(x)  s.t.  H(x) = 0,  lo <= g(x) <= up.
pub trait NlpProblem: Sync {
    fn n_vars(&self) -> usize;
    fn n_eq(&self) -> usize;
    /// Inequality bounds; the vector length defines the inequality count.
    fn bounds(&self) -> (Vec<f64>, Vec<f64>);
    fn structure(&self) -> KktStructure;

    fn objective(&self, x: &[f64]) -> f64;
    fn objective_grad(&self, x: &[f64]) -> Vec<f64>;
    fn eq_values(&self, x: &[f64]) -> Vec<f64>;
    fn eq_jacobian(&self, x: &[f64]) -> Triplets;
    fn ineq_values(&self, x: &[f64]) -> Vec<f64>;
    fn ineq_jacobian(&self, x: &[f64]) -> Triplets;

    /// Curvature of the Lagrangian,
    ///   W = d2F - sum_j y_j d2H_j - sum_i nu_i d2g_i,
    /// assembled on the problem's superblock layout (variables only; the
    /// solver adds the Jacobian and barrier terms).
    fn lagrangian_hessian(&self, x: &[f64], y: &[f64], nu: &[f64]) -> BlockTridiag;

    /// Fresh variable-only matrix on the superblock layout, for
    /// implementations of [`NlpProblem::lagrangian_hessian`].
    fn empty_hessian(&self) -> BlockTridiag {
        BlockTridiag::zeros(&self.structure().superblock_sizes())
    }
}
