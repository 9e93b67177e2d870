//! Transfer-limit estimators: elastic net and feedforward networks, with
//! exact analytic Jacobians and Hessians of the prediction with respect to
//! the inputs. Derivatives include the feature/target normalization chain
//! factors, so downstream consumers work entirely in physical units.

mod activation;
mod elastic_net;
mod mlp;
mod train;


pub use activation::Activation;
pub use elastic_net::{fit_elastic_net, ElasticNetFit};
pub use mlp::{
    deep_input_hessians, deep_input_jacobian, forward, slnn_input_hessians, slnn_input_jacobian,
    ForwardPass, Layer, MlpCore,
};
pub use train::{train_core, ModelPreset, TrainOutcome, TrainingConfig};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Normalization, TrainingDataset};

#[derive(Debug, Error)]
pub enum SurrogateError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("input contract mismatch: model expects {expected}, got {got}")]
    HashMismatch { expected: String, got: String },
    #[error("training diverged to a non-finite loss")]
    TrainingDiverged,
    #[error("non-finite training data")]
    NonFiniteData,
    #[error("invalid architecture: {0}")]
    InvalidArchitecture(String),
    #[error("model file: {0}")]
    Io(String),
}

/// Linear estimator: one coefficient column per monitored corridor, in
/// normalized space.
#[derive(Debug, Clone)]
pub struct ElasticNetModel {
    /// (n_features x n_targets)
    pub coefficients: DMatrix<f64>,
    pub intercept: DVector<f64>,
    pub norm: Normalization,
    pub meta: ModelMeta,
}

/// Network estimator operating in normalized space.
#[derive(Debug, Clone)]
pub struct MlpModel {
    pub core: MlpCore,
    pub norm: Normalization,
    pub meta: ModelMeta,
}

/// Provenance carried by every trained model; `feature_names` is the input
/// contract.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub feature_names: Vec<String>,
    pub target_names: Vec<String>,
    pub case_hash: String,
    pub dataset_hash: String,
    pub seed: u64,
    pub train_iterations: usize,
}

#[derive(Debug, Clone)]
pub enum SurrogateModel {
    ElasticNet(ElasticNetModel),
    Mlp(MlpModel),
}

impl SurrogateModel {
    pub fn meta(&self) -> &ModelMeta {
        match self {
            SurrogateModel::ElasticNet(m) => &m.meta,
            SurrogateModel::Mlp(m) => &m.meta,
        }
    }

    pub fn norm(&self) -> &Normalization {
        match self {
            SurrogateModel::ElasticNet(m) => &m.norm,
            SurrogateModel::Mlp(m) => &m.norm,
        }
    }

    pub fn n_features(&self) -> usize {
        self.meta().feature_names.len()
    }

    pub fn n_targets(&self) -> usize {
        self.meta().target_names.len()
    }

    pub fn kind(&self) -> &'static str {
        match self {
            SurrogateModel::ElasticNet(_) => "elastic_net",
            SurrogateModel::Mlp(m) => {
                if m.core.hidden_layers() == 1 {
                    "slnn"
                } else {
                    "dlnn"
                }
            }
        }
    }

    fn check_input(&self, features: &[f64]) -> Result<(), SurrogateError> {
        if features.len() != self.n_features() {
            return Err(SurrogateError::DimensionMismatch {
                expected: self.n_features(),
                got: features.len(),
            });
        }
        Ok(())
    }

    /// Verifies that an input producer (a case) matches the model's
    /// feature contract.
    pub fn check_contract(&self, feature_names: &[String]) -> Result<(), SurrogateError> {
        if feature_names != self.meta().feature_names.as_slice() {
            return Err(SurrogateError::HashMismatch {
                expected: self.meta().feature_names.join(","),
                got: feature_names.join(","),
            });
        }
        Ok(())
    }

    /// Per-corridor limit estimates in physical units: forward pass in
    /// normalized space, de-normalized output.
    pub fn predict(&self, features: &[f64]) -> Result<Vec<f64>, SurrogateError> {
        self.check_input(features)?;
        let u = DVector::from_vec(self.norm().normalize_features(features));
        let raw: Vec<f64> = match self {
            SurrogateModel::ElasticNet(m) => {
                let y = m.coefficients.transpose() * u + &m.intercept;
                y.iter().copied().collect()
            }
            SurrogateModel::Mlp(m) => {
                let fwd = forward(&m.core, &u);
                fwd.output.iter().copied().collect()
            }
        };
        Ok(self.norm().denormalize_targets(&raw))
    }

    /// Exact Jacobian d(limit_k)/d(feature_i) in physical units,
    /// (n_targets x n_features).
    pub fn jacobian(&self, features: &[f64]) -> Result<DMatrix<f64>, SurrogateError> {
        self.check_input(features)?;
        let norm = self.norm().clone();
        let mut j = match self {
            SurrogateModel::ElasticNet(m) => m.coefficients.transpose(),
            SurrogateModel::Mlp(m) => {
                let u = DVector::from_vec(norm.normalize_features(features));
                let fwd = forward(&m.core, &u);
                if m.core.hidden_layers() == 1 {
                    slnn_input_jacobian(&m.core, &fwd)
                } else {
                    deep_input_jacobian(&m.core, &fwd)
                }
            }
        };
        apply_jacobian_chain(&mut j, &norm);
        Ok(j)
    }

    /// Exact symmetric Hessians d2(limit_k)/d(feature)^2 in physical
    /// units, one matrix per corridor.
    pub fn hessians(&self, features: &[f64]) -> Result<Vec<DMatrix<f64>>, SurrogateError> {
        self.check_input(features)?;
        let norm = self.norm().clone();
        match self {
            SurrogateModel::ElasticNet(_) => {
                let d = self.n_features();
                Ok(vec![DMatrix::zeros(d, d); self.n_targets()])
            }
            SurrogateModel::Mlp(m) => {
                let u = DVector::from_vec(norm.normalize_features(features));
                let fwd = forward(&m.core, &u);
                let mut hs = if m.core.hidden_layers() == 1 {
                    slnn_input_hessians(&m.core, &fwd)
                } else {
                    deep_input_hessians(&m.core, &fwd)
                };
                for (k, h) in hs.iter_mut().enumerate() {
                    apply_hessian_chain(h, k, &norm);
                }
                Ok(hs)
            }
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ModelFile::from_model(self)).expect("model serialization")
    }

    pub fn from_json(text: &str) -> Result<SurrogateModel, SurrogateError> {
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| SurrogateError::Io(e.to_string()))?;
        file.into_model()
    }

    pub fn save(&self, path: &std::path::Path) -> Result<(), SurrogateError> {
        std::fs::write(path, self.to_json()).map_err(|e| SurrogateError::Io(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<SurrogateModel, SurrogateError> {
        let text = std::fs::read_to_string(path).map_err(|e| SurrogateError::Io(e.to_string()))?;
        SurrogateModel::from_json(&text)
    }
}

/// Physical-unit chain factors: J_phys[k, i] = y_std[k] * J[k, i] / u_std[i].
pub(crate) fn apply_jacobian_chain(j: &mut DMatrix<f64>, norm: &Normalization) {
    for k in 0..j.nrows() {
        for i in 0..j.ncols() {
            j[(k, i)] = norm.y_std[k] * j[(k, i)] / norm.u_std[i];
        }
    }
}

/// H_phys[i, j] = y_std[k] * H[i, j] / (u_std[i] * u_std[j]).
pub(crate) fn apply_hessian_chain(h: &mut DMatrix<f64>, k: usize, norm: &Normalization) {
    for i in 0..h.nrows() {
        for j in 0..h.ncols() {
            h[(i, j)] = norm.y_std[k] * h[(i, j)] / (norm.u_std[i] * norm.u_std[j]);
        }
    }
}

/// Fits one elastic net per corridor on the normalized training split.
pub fn train_elastic_net(
    dataset: &TrainingDataset,
    config: &TrainingConfig,
) -> Result<ElasticNetModel, SurrogateError> {
    let n = dataset.n_train;
    let d = dataset.features.ncols();
    let k = dataset.targets.ncols();
    let mut u = DMatrix::zeros(n, d);
    for r in 0..n {
        for c in 0..d {
            u[(r, c)] = (dataset.features[(r, c)] - dataset.norm.u_mean[c]) / dataset.norm.u_std[c];
        }
    }
    let mut coefficients = DMatrix::zeros(d, k);
    let mut intercept = DVector::zeros(k);
    for t in 0..k {
        let y = DVector::from_fn(n, |r, _| {
            (dataset.targets[(r, t)] - dataset.norm.y_mean[t]) / dataset.norm.y_std[t]
        });
        let fit = fit_elastic_net(
            &u,
            &y,
            config.en_gamma1,
            config.en_gamma2,
            config.tolerance,
            config.max_iterations,
        )?;
        coefficients.set_column(t, &fit.beta);
        intercept[t] = fit.intercept;
    }
    Ok(ElasticNetModel {
        coefficients,
        intercept,
        norm: dataset.norm.clone(),
        meta: ModelMeta {
            feature_names: dataset.feature_names.clone(),
            target_names: dataset.target_names.clone(),
            case_hash: dataset.case_hash.clone(),
            dataset_hash: dataset.content_hash(),
            seed: config.seed,
            train_iterations: 0,
        },
    })
}

/// Trains a network estimator on the dataset's training split.
pub fn train_mlp(
    dataset: &TrainingDataset,
    config: &TrainingConfig,
) -> Result<MlpModel, SurrogateError> {
    let outcome = train_core(dataset, config)?;
    Ok(MlpModel {
        core: outcome.core,
        norm: dataset.norm.clone(),
        meta: ModelMeta {
            feature_names: dataset.feature_names.clone(),
            target_names: dataset.target_names.clone(),
            case_hash: dataset.case_hash.clone(),
            dataset_hash: dataset.content_hash(),
            seed: config.seed,
            train_iterations: outcome.iterations,
        },
    })
}

/// Mean squared prediction error in physical units over a row range.
pub fn mse(
    model: &SurrogateModel,
    dataset: &TrainingDataset,
    rows: std::ops::Range<usize>,
) -> Result<f64, SurrogateError> {
    let k = dataset.targets.ncols();
    let mut total = 0.0;
    let mut count = 0usize;
    for r in rows {
        let u: Vec<f64> = (0..dataset.features.ncols())
            .map(|c| dataset.features[(r, c)])
            .collect();
        let pred = model.predict(&u)?;
        for t in 0..k {
            let e = pred[t] - dataset.targets[(r, t)];
            total += e * e;
            count += 1;
        }
    }
    Ok(total / count.max(1) as f64)
}

/// Test-split MSE, the headline quality number.
pub fn test_mse(model: &SurrogateModel, dataset: &TrainingDataset) -> Result<f64, SurrogateError> {
    mse(model, dataset, dataset.n_train..dataset.n_samples())
}

#[derive(Serialize, Deserialize)]
struct LayerFile {
    rows: usize,
    cols: usize,
    /// Row-major weights.
    w: Vec<f64>,
    b: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    activation: Option<Activation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    layers: Option<Vec<LayerFile>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    coefficients: Option<LayerFile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    intercept: Option<Vec<f64>>,
    norm: Normalization,
    meta: ModelMeta,
}

fn matrix_to_file(m: &DMatrix<f64>) -> LayerFile {
    let mut w = Vec::with_capacity(m.len());
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            w.push(m[(r, c)]);
        }
    }
    LayerFile {
        rows: m.nrows(),
        cols: m.ncols(),
        w,
        b: Vec::new(),
    }
}

fn matrix_from_file(f: &LayerFile) -> Result<DMatrix<f64>, SurrogateError> {
    if f.w.len() != f.rows * f.cols {
        return Err(SurrogateError::Io("weight array length mismatch".into()));
    }
    Ok(DMatrix::from_row_slice(f.rows, f.cols, &f.w))
}

impl ModelFile {
    fn from_model(model: &SurrogateModel) -> ModelFile {
        match model {
            SurrogateModel::ElasticNet(m) => ModelFile {
                kind: "elastic_net".into(),
                activation: None,
                layers: None,
                coefficients: Some(matrix_to_file(&m.coefficients)),
                intercept: Some(m.intercept.iter().copied().collect()),
                norm: m.norm.clone(),
                meta: m.meta.clone(),
            },
            SurrogateModel::Mlp(m) => ModelFile {
                kind: "mlp".into(),
                activation: Some(m.core.activation),
                layers: Some(
                    m.core
                        .layers
                        .iter()
                        .map(|l| {
                            let mut f = matrix_to_file(&l.w);
                            f.b = l.b.iter().copied().collect();
                            f
                        })
                        .collect(),
                ),
                coefficients: None,
                intercept: None,
                norm: m.norm.clone(),
                meta: m.meta.clone(),
            },
        }
    }

    fn into_model(self) -> Result<SurrogateModel, SurrogateError> {
        match self.kind.as_str() {
            "elastic_net" => {
                let c = self
                    .coefficients
                    .as_ref()
                    .ok_or_else(|| SurrogateError::Io("missing coefficients".into()))?;
                Ok(SurrogateModel::ElasticNet(ElasticNetModel {
                    coefficients: matrix_from_file(c)?,
                    intercept: DVector::from_vec(self.intercept.unwrap_or_default()),
                    norm: self.norm,
                    meta: self.meta,
                }))
            }
            "mlp" => {
                let layers = self
                    .layers
                    .ok_or_else(|| SurrogateError::Io("missing layers".into()))?;
                let core = MlpCore {
                    layers: layers
                        .iter()
                        .map(|f| {
                            Ok(Layer {
                                w: matrix_from_file(f)?,
                                b: DVector::from_vec(f.b.clone()),
                            })
                        })
                        .collect::<Result<_, SurrogateError>>()?,
                    activation: self
                        .activation
                        .ok_or_else(|| SurrogateError::Io("missing activation".into()))?,
                };
                if !core.check_chain() {
                    return Err(SurrogateError::InvalidArchitecture(
                        "layer dimensions do not chain".into(),
                    ));
                }
                Ok(SurrogateModel::Mlp(MlpModel {
                    core,
                    norm: self.norm,
                    meta: self.meta,
                }))
            }
            other => Err(SurrogateError::Io(format!("unknown model kind {other:?}"))),
        }
    }
}
