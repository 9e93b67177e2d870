//! Network training on the gamma-weighted objective
//! gamma * ||Y - Phi(U)||^2 + (1 - gamma) * sum_l ||w_l||^2
//! over the normalized training split. Small stacks run limited-memory
//! quasi-Newton with a backtracking line search; deeper stacks run
//! full-batch adaptive first-order descent with monotone step acceptance.
//! Either way the accepted-loss sequence is decreasing and the run is
//! deterministic in the seed.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::activation::Activation;
use super::mlp::{Layer, MlpCore};
use super::SurrogateError;
use crate::dataset::TrainingDataset;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainingConfig {
    /// Data-misfit weight in [0, 1]; (1 - gamma) weights the squared
    /// weight norm.
    pub gamma: f64,
    pub max_iterations: usize,
    /// Gradient-infinity-norm stopping threshold.
    pub tolerance: f64,
    pub seed: u64,
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub learning_rate: f64,
    /// Elastic-net penalties (L1, L2).
    pub en_gamma1: f64,
    pub en_gamma2: f64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            gamma: 0.5,
            max_iterations: 3000,
            tolerance: 1e-6,
            seed: 7,
            hidden: vec![10],
            activation: Activation::Sigmoid,
            learning_rate: 0.02,
            en_gamma1: 0.5,
            en_gamma2: 0.5,
        }
    }
}

/// Named architecture presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelPreset {
    /// Elastic net.
    En,
    /// One hidden layer of 10, sigmoid.
    Slnn,
    /// {40-20}, sigmoid.
    Dl2,
    /// {80-40-20}, sigmoid.
    Dl3,
    /// {40-20-10-5-2}, softplus.
    Dl5,
}

impl ModelPreset {
    pub fn parse(name: &str) -> Option<ModelPreset> {
        match name {
            "en" => Some(ModelPreset::En),
            "slnn" => Some(ModelPreset::Slnn),
            "dl2" => Some(ModelPreset::Dl2),
            "dl3" => Some(ModelPreset::Dl3),
            "dl5" => Some(ModelPreset::Dl5),
            _ => None,
        }
    }

    pub fn config(self) -> TrainingConfig {
        let mut c = TrainingConfig::default();
        match self {
            ModelPreset::En => {}
            ModelPreset::Slnn => c.hidden = vec![10],
            ModelPreset::Dl2 => c.hidden = vec![40, 20],
            ModelPreset::Dl3 => c.hidden = vec![80, 40, 20],
            ModelPreset::Dl5 => {
                c.hidden = vec![40, 20, 10, 5, 2];
                c.activation = Activation::Softplus;
            }
        }
        c
    }
}

/// Normalized training matrices: rows as samples.
struct Batch {
    u: DMatrix<f64>,
    y: DMatrix<f64>,
}

fn normalized_batch(dataset: &TrainingDataset, rows: std::ops::Range<usize>) -> Batch {
    let n = rows.len();
    let d = dataset.features.ncols();
    let k = dataset.targets.ncols();
    let mut u = DMatrix::zeros(n, d);
    let mut y = DMatrix::zeros(n, k);
    for (r, row) in rows.enumerate() {
        for c in 0..d {
            u[(r, c)] =
                (dataset.features[(row, c)] - dataset.norm.u_mean[c]) / dataset.norm.u_std[c];
        }
        for c in 0..k {
            y[(r, c)] =
                (dataset.targets[(row, c)] - dataset.norm.y_mean[c]) / dataset.norm.y_std[c];
        }
    }
    Batch { u, y }
}

fn init_core(d_in: usize, d_out: usize, config: &TrainingConfig) -> MlpCore {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut layers = Vec::new();
    let mut prev = d_in;
    for &h in &config.hidden {
        layers.push(random_layer(&mut rng, h, prev));
        prev = h;
    }
    layers.push(random_layer(&mut rng, d_out, prev));
    MlpCore {
        layers,
        activation: config.activation,
    }
}

fn random_layer(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Layer {
    let scale = 1.0 / (cols as f64).sqrt();
    Layer {
        w: DMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-scale..scale)),
        b: DVector::zeros(rows),
    }
}

/// Loss and full parameter gradient by reverse accumulation over the
/// whole batch.
fn loss_and_grad(core: &MlpCore, batch: &Batch, gamma: f64) -> (f64, Vec<Layer>) {
    let n_hidden = core.hidden_layers();
    // Forward with cached layer inputs (rows = samples).
    let mut acts: Vec<DMatrix<f64>> = Vec::with_capacity(n_hidden + 1);
    let mut pres: Vec<DMatrix<f64>> = Vec::with_capacity(n_hidden);
    acts.push(batch.u.clone());
    for layer in &core.layers[..n_hidden] {
        let z = {
            let mut z = acts.last().unwrap() * layer.w.transpose();
            for mut row in z.row_iter_mut() {
                row += layer.b.transpose();
            }
            z
        };
        acts.push(z.map(|x| core.activation.value(x)));
        pres.push(z);
    }
    let out_layer = &core.layers[n_hidden];
    let mut yhat = acts.last().unwrap() * out_layer.w.transpose();
    for mut row in yhat.row_iter_mut() {
        row += out_layer.b.transpose();
    }

    let err = &yhat - &batch.y;
    let data_term: f64 = err.iter().map(|e| e * e).sum();
    let decay_term: f64 = core
        .layers
        .iter()
        .map(|l| l.w.iter().map(|w| w * w).sum::<f64>())
        .sum();
    let loss = gamma * data_term + (1.0 - gamma) * decay_term;

    // Backward.
    let mut grads: Vec<Layer> = core
        .layers
        .iter()
        .map(|l| Layer {
            w: DMatrix::zeros(l.w.nrows(), l.w.ncols()),
            b: DVector::zeros(l.b.len()),
        })
        .collect();
    let mut dz = err * (2.0 * gamma); // d loss / d yhat, linear output
    for l in (0..core.layers.len()).rev() {
        grads[l].w = dz.transpose() * &acts[l] + core.layers[l].w.clone() * (2.0 * (1.0 - gamma));
        grads[l].b = dz.row_sum().transpose();
        if l > 0 {
            let da = dz * &core.layers[l].w;
            let d1 = pres[l - 1].map(|x| core.activation.d1(x));
            dz = da.component_mul(&d1);
        }
    }
    (loss, grads)
}

fn flatten(layers: &[Layer]) -> DVector<f64> {
    let total: usize = layers.iter().map(|l| l.w.len() + l.b.len()).sum();
    let mut v = DVector::zeros(total);
    let mut at = 0;
    for l in layers {
        for &x in l.w.iter() {
            v[at] = x;
            at += 1;
        }
        for &x in l.b.iter() {
            v[at] = x;
            at += 1;
        }
    }
    v
}

fn unflatten(core: &mut MlpCore, v: &DVector<f64>) {
    let mut at = 0;
    for l in core.layers.iter_mut() {
        for x in l.w.iter_mut() {
            *x = v[at];
            at += 1;
        }
        for x in l.b.iter_mut() {
            *x = v[at];
            at += 1;
        }
    }
}

pub struct TrainOutcome {
    pub core: MlpCore,
    pub train_loss: f64,
    pub iterations: usize,
}

/// Limited-memory quasi-Newton with Armijo backtracking. Monotone by
/// construction.
fn train_lbfgs(
    mut core: MlpCore,
    batch: &Batch,
    val: &Batch,
    config: &TrainingConfig,
) -> Result<TrainOutcome, SurrogateError> {
    const MEMORY: usize = 10;
    let mut x = flatten(&core.layers);
    let (mut loss, grads) = loss_and_grad(&core, batch, config.gamma);
    let mut grad = flatten(&grads);
    let mut s_list: Vec<DVector<f64>> = Vec::new();
    let mut y_list: Vec<DVector<f64>> = Vec::new();
    let mut best_val = f64::INFINITY;
    let mut best_x = x.clone();
    let mut iterations = 0;

    while iterations < config.max_iterations && grad.amax() > config.tolerance {
        iterations += 1;
        // Two-loop recursion.
        let mut q = grad.clone();
        let mut alphas = Vec::with_capacity(s_list.len());
        for (s, yv) in s_list.iter().zip(&y_list).rev() {
            let rho = 1.0 / yv.dot(s);
            let a = rho * s.dot(&q);
            q -= yv * a;
            alphas.push((a, rho));
        }
        if let (Some(s), Some(yv)) = (s_list.last(), y_list.last()) {
            q *= s.dot(yv) / yv.dot(yv);
        }
        for ((s, yv), &(a, rho)) in s_list.iter().zip(&y_list).zip(alphas.iter().rev()) {
            let b = rho * yv.dot(&q);
            q += s * (a - b);
        }
        let direction = -q;

        let slope = grad.dot(&direction);
        let direction = if slope < 0.0 { direction } else { -grad.clone() };
        let slope = grad.dot(&direction).min(-1e-16);

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let x_new = &x + &direction * step;
            unflatten(&mut core, &x_new);
            let (l_new, g_new) = loss_and_grad(&core, batch, config.gamma);
            if l_new.is_finite() && l_new <= loss + 1e-4 * step * slope {
                accepted = Some((x_new, l_new, flatten(&g_new)));
                break;
            }
            step *= 0.5;
        }
        let Some((x_new, l_new, g_new)) = accepted else {
            break;
        };
        let s = &x_new - &x;
        let yv = &g_new - &grad;
        if yv.dot(&s) > 1e-12 {
            s_list.push(s);
            y_list.push(yv);
            if s_list.len() > MEMORY {
                s_list.remove(0);
                y_list.remove(0);
            }
        }
        debug_assert!(l_new <= loss);
        x = x_new;
        loss = l_new;
        grad = g_new;

        if iterations % 10 == 0 || iterations == config.max_iterations {
            unflatten(&mut core, &x);
            let (vl, _) = loss_and_grad(&core, val, config.gamma);
            if vl < best_val {
                best_val = vl;
                best_x = x.clone();
            }
        }
    }
    unflatten(&mut core, &x);
    let (vl, _) = loss_and_grad(&core, val, config.gamma);
    if vl >= best_val && best_val.is_finite() {
        unflatten(&mut core, &best_x);
    }
    let (final_loss, _) = loss_and_grad(&core, batch, config.gamma);
    if !final_loss.is_finite() {
        return Err(SurrogateError::TrainingDiverged);
    }
    Ok(TrainOutcome {
        core,
        train_loss: final_loss,
        iterations,
    })
}

/// Full-batch adaptive first-order descent with monotone acceptance: a
/// step that fails to reduce the loss is rolled back, the learning rate is
/// halved and the moments reset.
fn train_adam(
    mut core: MlpCore,
    batch: &Batch,
    val: &Batch,
    config: &TrainingConfig,
) -> Result<TrainOutcome, SurrogateError> {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;
    let mut x = flatten(&core.layers);
    let (mut loss, g0) = loss_and_grad(&core, batch, config.gamma);
    let mut grad = flatten(&g0);
    let mut m = DVector::zeros(x.len());
    let mut v = DVector::zeros(x.len());
    let mut lr = config.learning_rate;
    let mut t = 0u32;
    let mut best_val = f64::INFINITY;
    let mut best_x = x.clone();
    let mut iterations = 0;
    let mut stall = 0usize;

    while iterations < config.max_iterations && grad.amax() > config.tolerance && lr > 1e-7 {
        iterations += 1;
        t += 1;
        m = m * BETA1 + &grad * (1.0 - BETA1);
        v = v.zip_map(&grad, |vi, gi| BETA2 * vi + (1.0 - BETA2) * gi * gi);
        let bias1 = 1.0 - BETA1.powi(t as i32);
        let bias2 = 1.0 - BETA2.powi(t as i32);
        let step = DVector::from_fn(x.len(), |i, _| {
            let vi: f64 = v[i];
            lr * (m[i] / bias1) / ((vi / bias2).sqrt() + EPS)
        });
        let x_new = &x - step;
        unflatten(&mut core, &x_new);
        let (l_new, g_new) = loss_and_grad(&core, batch, config.gamma);
        if !l_new.is_finite() {
            unflatten(&mut core, &best_x);
            return Err(SurrogateError::TrainingDiverged);
        }
        if l_new < loss {
            x = x_new;
            loss = l_new;
            grad = flatten(&g_new);
            stall = 0;
        } else {
            // Roll back and restart the moment estimates at a gentler rate.
            unflatten(&mut core, &x);
            m.fill(0.0);
            v.fill(0.0);
            t = 0;
            lr *= 0.5;
            stall += 1;
            if stall > 20 {
                break;
            }
        }
        if iterations % 25 == 0 {
            unflatten(&mut core, &x);
            let (vl, _) = loss_and_grad(&core, val, config.gamma);
            if vl < best_val {
                best_val = vl;
                best_x = x.clone();
            }
        }
    }
    unflatten(&mut core, &x);
    let (vl, _) = loss_and_grad(&core, val, config.gamma);
    if vl >= best_val && best_val.is_finite() {
        unflatten(&mut core, &best_x);
    }
    let (final_loss, _) = loss_and_grad(&core, batch, config.gamma);
    Ok(TrainOutcome {
        core,
        train_loss: final_loss,
        iterations,
    })
}

/// Trains a network on the dataset's training split; the last 15% of the
/// training rows serve as the validation slice for best-iterate selection.
pub fn train_core(
    dataset: &TrainingDataset,
    config: &TrainingConfig,
) -> Result<TrainOutcome, SurrogateError> {
    if config.hidden.is_empty() {
        return Err(SurrogateError::InvalidArchitecture(
            "at least one hidden layer required".into(),
        ));
    }
    if !(0.0..=1.0).contains(&config.gamma) {
        return Err(SurrogateError::InvalidArchitecture("gamma outside [0, 1]".into()));
    }
    if !dataset.features.iter().all(|v| v.is_finite())
        || !dataset.targets.iter().all(|v| v.is_finite())
    {
        return Err(SurrogateError::NonFiniteData);
    }
    let n_train = dataset.n_train;
    let n_fit = (n_train as f64 * 0.85).round().max(1.0) as usize;
    let fit = normalized_batch(dataset, 0..n_fit);
    let val = if n_fit < n_train {
        normalized_batch(dataset, n_fit..n_train)
    } else {
        normalized_batch(dataset, 0..n_fit)
    };
    let d_in = dataset.features.ncols();
    let d_out = dataset.targets.ncols();
    let core = init_core(d_in, d_out, config);
    let n_params: usize = core.layers.iter().map(|l| l.w.len() + l.b.len()).sum();
    if n_params <= 4000 {
        train_lbfgs(core, &fit, &val, config)
    } else {
        train_adam(core, &fit, &val, config)
    }
}
