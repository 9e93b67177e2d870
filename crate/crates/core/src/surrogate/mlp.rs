//! Feedforward network evaluation and exact input derivatives.
//!
//! Two derivative routes exist: a hard-coded single-hidden-layer form and
//! the general deep recursion built from per-layer factors. They share the
//! same primitive operations, so on a one-hidden-layer network the deep
//! route reproduces the specialized one bit for bit.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::activation::Activation;

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    /// (n_out x n_in)
    pub w: DMatrix<f64>,
    pub b: DVector<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LayerShape {
    pub rows: usize,
    pub cols: usize,
}

/// Weight stack with a linear output layer; all hidden layers share the
/// activation.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpCore {
    pub layers: Vec<Layer>,
    pub activation: Activation,
}

impl MlpCore {
    pub fn n_inputs(&self) -> usize {
        self.layers[0].w.ncols()
    }

    pub fn n_outputs(&self) -> usize {
        self.layers.last().expect("nonempty").w.nrows()
    }

    pub fn hidden_layers(&self) -> usize {
        self.layers.len() - 1
    }

    pub fn check_chain(&self) -> bool {
        self.layers
            .windows(2)
            .all(|pair| pair[1].w.ncols() == pair[0].w.nrows())
            && self
                .layers
                .iter()
                .all(|l| l.b.len() == l.w.nrows())
    }
}

/// Cached pre-activations and activations of one normalized input.
pub struct ForwardPass {
    /// z_l for each hidden layer.
    pub pre: Vec<DVector<f64>>,
    /// S(z_l) for each hidden layer.
    pub post: Vec<DVector<f64>>,
    pub output: DVector<f64>,
}

pub fn forward(core: &MlpCore, input: &DVector<f64>) -> ForwardPass {
    let n_hidden = core.hidden_layers();
    let mut pre = Vec::with_capacity(n_hidden);
    let mut post = Vec::with_capacity(n_hidden);
    let mut a = input.clone();
    for layer in &core.layers[..n_hidden] {
        let z = &layer.w * &a + &layer.b;
        let s = z.map(|x| core.activation.value(x));
        pre.push(z);
        post.push(s.clone());
        a = s;
    }
    let out_layer = &core.layers[n_hidden];
    let output = &out_layer.w * &a + &out_layer.b;
    ForwardPass { pre, post, output }
}

/// diag(d) * m.
fn row_scale(d: &DVector<f64>, m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    for (r, &s) in d.iter().enumerate() {
        for c in 0..out.ncols() {
            out[(r, c)] *= s;
        }
    }
    out
}

/// Copies the lower triangle onto the upper one so the result is symmetric
/// by construction, not merely up to rounding.
fn mirror_lower(h: &mut DMatrix<f64>) {
    for i in 0..h.nrows() {
        for j in 0..i {
            h[(j, i)] = h[(i, j)];
        }
    }
}

/// Single-hidden-layer Jacobian: w_2 [S'(z_1) x] w_1.
pub fn slnn_input_jacobian(core: &MlpCore, fwd: &ForwardPass) -> DMatrix<f64> {
    debug_assert_eq!(core.hidden_layers(), 1);
    let d1 = fwd.pre[0].map(|x| core.activation.d1(x));
    let f1 = row_scale(&d1, &core.layers[0].w);
    &core.layers[1].w * &f1
}

/// Single-hidden-layer Hessians, one per output:
/// w_1^T diag(w_2[k, :] . S''(z_1)) w_1.
pub fn slnn_input_hessians(core: &MlpCore, fwd: &ForwardPass) -> Vec<DMatrix<f64>> {
    debug_assert_eq!(core.hidden_layers(), 1);
    let d2 = fwd.pre[0].map(|x| core.activation.d2(x));
    let w1 = &core.layers[0].w;
    let w2 = &core.layers[1].w;
    (0..core.n_outputs())
        .map(|k| {
            let coeff = DVector::from_fn(d2.len(), |m, _| w2[(k, m)] * d2[m]);
            let mut h = w1.transpose() * row_scale(&coeff, w1);
            mirror_lower(&mut h);
            h
        })
        .collect()
}

/// Deep Jacobian: w_L [S'(z_{L-1}) x w_{L-1}] ... [S'(z_1) x w_1],
/// accumulated left to right.
pub fn deep_input_jacobian(core: &MlpCore, fwd: &ForwardPass) -> DMatrix<f64> {
    let n_hidden = core.hidden_layers();
    let mut acc = core.layers[n_hidden].w.clone();
    for l in (0..n_hidden).rev() {
        let d1 = fwd.pre[l].map(|x| core.activation.d1(x));
        let f = row_scale(&d1, &core.layers[l].w);
        acc = acc * f;
    }
    acc
}

/// Deep Hessians from per-layer curvature terms. With
/// P_l = dz_l/du and T_l = dy/da_l, layer l contributes
/// P_l^T diag(T_l[k, :] . S''(z_l)) P_l to output k, and the Hessian is
/// the sum over hidden layers. Each term is symmetric by construction.
pub fn deep_input_hessians(core: &MlpCore, fwd: &ForwardPass) -> Vec<DMatrix<f64>> {
    let n_hidden = core.hidden_layers();
    let n_in = core.n_inputs();
    let n_out = core.n_outputs();

    // Forward sensitivities P_l = dz_l/du.
    let mut p = Vec::with_capacity(n_hidden);
    p.push(core.layers[0].w.clone());
    for l in 1..n_hidden {
        let d1 = fwd.pre[l - 1].map(|x| core.activation.d1(x));
        let scaled = row_scale(&d1, &p[l - 1]);
        p.push(&core.layers[l].w * scaled);
    }

    // Backward sensitivities T_l = dy/da_l, from the output down.
    let mut t = vec![DMatrix::zeros(0, 0); n_hidden];
    t[n_hidden - 1] = core.layers[n_hidden].w.clone();
    for l in (0..n_hidden.saturating_sub(1)).rev() {
        let d1 = fwd.pre[l + 1].map(|x| core.activation.d1(x));
        let f = row_scale(&d1, &core.layers[l + 1].w);
        t[l] = &t[l + 1] * f;
    }

    let d2: Vec<DVector<f64>> = (0..n_hidden)
        .map(|l| fwd.pre[l].map(|x| core.activation.d2(x)))
        .collect();
    (0..n_out)
        .map(|k| {
            let mut h = DMatrix::zeros(n_in, n_in);
            for l in 0..n_hidden {
                let coeff = DVector::from_fn(d2[l].len(), |m, _| t[l][(k, m)] * d2[l][m]);
                h += p[l].transpose() * row_scale(&coeff, &p[l]);
            }
            mirror_lower(&mut h);
            h
        })
        .collect()
}
