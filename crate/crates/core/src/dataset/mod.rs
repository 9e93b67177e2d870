//! Quasi-random operating-condition sampling, feature extraction and
//! transfer-capability labeling. Sampling is fully deterministic: the same
//! configuration always reproduces the same dataset bit for bit.

mod features;
mod weyl;

#[cfg(test)]
mod tests;

pub use features::{extract_features, feature_names, FeatureLayout, UnitKind};
pub use weyl::{frac_e_pow, weyl_sequence, DoubleDouble, WeylStream};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::grid::{solve_power_flow, NetworkCase, OperatingPoint, PowerFlowConfig};
use crate::ttc::{compute_ttc, TtcSearchConfig};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("no samples requested")]
    Empty,
    #[error("dataset degenerate: {dropped} of {total} samples dropped")]
    Degenerate { dropped: usize, total: usize },
    #[error("invalid sampling config: {0}")]
    InvalidConfig(String),
    #[error("io: {0}")]
    Io(String),
}

/// Bounds and statistics steering the quasi-random sampler. Control
/// ordering is [P per unit, Q per unit, V per generator] in canonical unit
/// order; load ordering is [P per bus, Q per bus] by ascending bus id.
/// Degenerate bounds (min == max) pin a column to a constant.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SamplingConfig {
    pub n_samples: usize,
    /// Expansion coefficient widening the load band beyond the historical
    /// deviation (> 1).
    pub expansion: f64,
    pub control_min: Vec<f64>,
    pub control_max: Vec<f64>,
    pub load_mean: Vec<f64>,
    pub load_dev: Vec<f64>,
}

impl SamplingConfig {
    /// Default sampling region for a case: generator outputs over their
    /// operating range, device injections over their ratings, generator
    /// voltage setpoints in a tight band, loads in a band of
    /// `load_dev_frac` around `load_level` times the base loads.
    pub fn for_case(case: &NetworkCase, load_level: f64, load_dev_frac: f64) -> Self {
        let layout = FeatureLayout::new(case);
        let index = case.index();
        let slack_bus = case.buses[index.slack].id;
        let mut control_min = Vec::new();
        let mut control_max = Vec::new();
        for &(kind, i) in &layout.units {
            let (lo, hi) = match kind {
                UnitKind::Generator => {
                    let g = &case.generators[i];
                    if g.bus == slack_bus {
                        (g.p, g.p)
                    } else {
                        (g.p_min, g.p_max)
                    }
                }
                UnitKind::Wind => (0.0, case.wind_farms[i].rated),
                UnitKind::Ess => (-case.ess_units[i].charge_max, case.ess_units[i].discharge_max),
            };
            control_min.push(lo);
            control_max.push(hi);
        }
        // Reactive injections of units are not independent controls here:
        // generator Q follows from the voltage setpoint, converters hold
        // unity power factor. Degenerate bounds keep the slots in place.
        for _ in &layout.units {
            control_min.push(0.0);
            control_max.push(0.0);
        }
        for &g in &layout.gen_order {
            let v = case.generators[g].v_setpoint;
            control_min.push((v - 0.02).max(0.95));
            control_max.push((v + 0.02).min(1.07));
        }
        let mut load_mean = Vec::new();
        let mut load_dev = Vec::new();
        for &b in &layout.bus_order {
            load_mean.push(case.buses[b].p_load * load_level);
            load_dev.push(case.buses[b].p_load * load_dev_frac);
        }
        for &b in &layout.bus_order {
            load_mean.push(case.buses[b].q_load * load_level);
            load_dev.push(case.buses[b].q_load.abs() * load_dev_frac);
        }
        SamplingConfig {
            n_samples: 1000,
            expansion: 1.2,
            control_min,
            control_max,
            load_mean,
            load_dev,
        }
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        if self.n_samples == 0 {
            return Err(DatasetError::Empty);
        }
        if self.expansion <= 1.0 {
            return Err(DatasetError::InvalidConfig(
                "expansion coefficient must exceed 1".into(),
            ));
        }
        if self.control_min.len() != self.control_max.len() {
            return Err(DatasetError::InvalidConfig("control bound length mismatch".into()));
        }
        if self.load_mean.len() != self.load_dev.len() {
            return Err(DatasetError::InvalidConfig("load stat length mismatch".into()));
        }
        for (lo, hi) in self.control_min.iter().zip(&self.control_max) {
            if lo > hi {
                return Err(DatasetError::InvalidConfig("control min above max".into()));
            }
        }
        Ok(())
    }
}

/// One sampled operating condition before power flow: control vector and
/// per-bus load vector in the canonical orderings.
#[derive(Debug, Clone)]
pub struct SampledCondition {
    pub controls: Vec<f64>,
    pub loads: Vec<f64>,
}

/// Generates `n_samples` low-discrepancy conditions. Control dimension j
/// uses multiplier e^j; load dimension j continues the family at
/// e^(n_controls + j) so no two dimensions share a multiplier. Loads map
/// into the symmetric band mean ± expansion * deviation.
pub fn sample_conditions(config: &SamplingConfig) -> Result<Vec<SampledCondition>, DatasetError> {
    config.validate()?;
    let n_con = config.control_min.len();
    let n_load = config.load_mean.len();
    let mut control_streams: Vec<WeylStream> =
        (0..n_con).map(|j| WeylStream::e_power(j as u32 + 1)).collect();
    let mut load_streams: Vec<WeylStream> = (0..n_load)
        .map(|j| WeylStream::e_power((n_con + j) as u32 + 1))
        .collect();
    let mut out = Vec::with_capacity(config.n_samples);
    for _ in 0..config.n_samples {
        let controls = control_streams
            .iter_mut()
            .enumerate()
            .map(|(j, s)| {
                let u = s.next_value();
                config.control_min[j] + u * (config.control_max[j] - config.control_min[j])
            })
            .collect();
        let loads = load_streams
            .iter_mut()
            .enumerate()
            .map(|(j, s)| {
                let u = s.next_value();
                let half = config.expansion * config.load_dev[j];
                (config.load_mean[j] - half) + u * 2.0 * half
            })
            .collect();
        out.push(SampledCondition { controls, loads });
    }
    Ok(out)
}

/// Instantiates a case for one sampled condition. Generator setpoints are
/// rescaled as a group so scheduled generation tracks the sampled load
/// plus a loss allowance, keeping the slack residual physical; the rescale
/// is a deterministic function of the sample.
pub fn apply_condition(
    case: &NetworkCase,
    condition: &SampledCondition,
) -> (NetworkCase, OperatingPoint) {
    let layout = FeatureLayout::new(case);
    let index = case.index();
    let slack_bus = case.buses[index.slack].id;
    let mut scaled = case.clone();
    let mut point = OperatingPoint::flat(case);
    let n_u = layout.units.len();

    // Loads first: they set the balance target.
    for (k, &b) in layout.bus_order.iter().enumerate() {
        scaled.buses[b].p_load = condition.loads[k];
        scaled.buses[b].q_load = condition.loads[layout.bus_order.len() + k];
    }
    let total_load: f64 = scaled.buses.iter().map(|b| b.p_load).sum();

    let mut device_p = 0.0;
    for (slot, &(kind, i)) in layout.units.iter().enumerate() {
        match kind {
            UnitKind::Wind => {
                point.wind_p[i] = condition.controls[slot];
                scaled.wind_farms[i].p = point.wind_p[i];
                device_p += point.wind_p[i];
            }
            UnitKind::Ess => {
                point.ess_p[i] = condition.controls[slot];
                scaled.ess_units[i].p = point.ess_p[i];
                device_p += point.ess_p[i];
            }
            UnitKind::Generator => {}
        }
    }
    for (k, &g) in layout.gen_order.iter().enumerate() {
        scaled.generators[g].v_setpoint = condition.controls[2 * n_u + k];
    }

    // Group rescale of non-slack generator setpoints toward the balance
    // target (1.5% loss allowance), clamped to unit limits.
    let mut gen_raw = vec![0.0; case.generators.len()];
    for (slot, &(kind, i)) in layout.units.iter().enumerate() {
        if kind == UnitKind::Generator {
            gen_raw[i] = condition.controls[slot];
        }
    }
    let target = (total_load * 1.015 - device_p).max(0.0);
    let raw_sum: f64 = case
        .generators
        .iter()
        .enumerate()
        .filter(|(_, g)| g.bus != slack_bus)
        .map(|(i, _)| gen_raw[i])
        .sum();
    let scale = if raw_sum > 1e-9 { target / raw_sum } else { 1.0 };
    for (i, g) in case.generators.iter().enumerate() {
        if g.bus == slack_bus {
            point.gen_p[i] = g.p;
        } else {
            point.gen_p[i] = (gen_raw[i] * scale).clamp(g.p_min, g.p_max);
        }
        scaled.generators[i].p = point.gen_p[i];
    }
    (scaled, point)
}

/// Feature-column normalization fitted on the training split: z-scores
/// with near-constant columns pinned to unit scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub u_mean: Vec<f64>,
    pub u_std: Vec<f64>,
    pub y_mean: Vec<f64>,
    pub y_std: Vec<f64>,
}

impl Normalization {
    pub fn fit(features: &DMatrix<f64>, targets: &DMatrix<f64>, rows: usize) -> Self {
        let stat = |m: &DMatrix<f64>| {
            let n = rows.max(1) as f64;
            let mut mean = vec![0.0; m.ncols()];
            let mut std = vec![0.0; m.ncols()];
            for c in 0..m.ncols() {
                let mu: f64 = (0..rows).map(|r| m[(r, c)]).sum::<f64>() / n;
                let var: f64 = (0..rows).map(|r| (m[(r, c)] - mu).powi(2)).sum::<f64>() / n;
                mean[c] = mu;
                std[c] = if var.sqrt() > 1e-12 { var.sqrt() } else { 1.0 };
            }
            (mean, std)
        };
        let (u_mean, u_std) = stat(features);
        let (y_mean, y_std) = stat(targets);
        Normalization {
            u_mean,
            u_std,
            y_mean,
            y_std,
        }
    }

    pub fn normalize_features(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .enumerate()
            .map(|(j, &x)| (x - self.u_mean[j]) / self.u_std[j])
            .collect()
    }

    pub fn denormalize_targets(&self, y: &[f64]) -> Vec<f64> {
        y.iter()
            .enumerate()
            .map(|(k, &v)| v * self.y_std[k] + self.y_mean[k])
            .collect()
    }
}

/// Labeled sample matrix with its split point and normalization.
#[derive(Debug, Clone)]
pub struct TrainingDataset {
    pub feature_names: Vec<String>,
    pub target_names: Vec<String>,
    /// rows = samples, columns = features.
    pub features: DMatrix<f64>,
    pub targets: DMatrix<f64>,
    /// Rows [0, n_train) are the training split.
    pub n_train: usize,
    pub norm: Normalization,
    pub case_hash: String,
    pub dropped: usize,
}

impl TrainingDataset {
    pub fn n_samples(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_test(&self) -> usize {
        self.n_samples() - self.n_train
    }

    /// Content digest over the sample matrices, for model provenance.
    pub fn content_hash(&self) -> String {
        let mut hasher = Sha256::new();
        for m in [&self.features, &self.targets] {
            for r in 0..m.nrows() {
                for c in 0..m.ncols() {
                    hasher.update(m[(r, c)].to_bits().to_le_bytes());
                }
            }
        }
        let digest = hasher.finalize();
        digest.iter().fold(String::new(), |mut acc, b| {
            acc.push_str(&format!("{b:02x}"));
            acc
        })
    }
}

pub fn case_hash(case: &NetworkCase) -> String {
    let mut hasher = Sha256::new();
    hasher.update(case.to_json().as_bytes());
    let digest = hasher.finalize();
    digest.iter().fold(String::new(), |mut acc, b| {
        acc.push_str(&format!("{b:02x}"));
        acc
    })
}

/// Samples conditions, labels each with its corridor transfer limits and
/// assembles the dataset. Rows whose power flow diverges or whose base
/// point is insecure are dropped and counted; more than half dropped is an
/// error. Labeling runs in parallel with deterministic row order.
pub fn build_dataset(
    case: &NetworkCase,
    sampling: &SamplingConfig,
    ttc_config: &TtcSearchConfig,
    split_fraction: f64,
) -> Result<TrainingDataset, DatasetError> {
    if !(0.0..=1.0).contains(&split_fraction) {
        return Err(DatasetError::InvalidConfig("split fraction outside [0, 1]".into()));
    }
    let conditions = sample_conditions(sampling)?;
    let pf = PowerFlowConfig::default();
    let rows: Vec<Option<(Vec<f64>, Vec<f64>)>> = conditions
        .par_iter()
        .map(|condition| {
            let (scaled, guess) = apply_condition(case, condition);
            let point = solve_power_flow(&scaled, &guess, &pf).ok()?;
            let ttc = compute_ttc(&scaled, &point, &scaled.tie_lines, ttc_config).ok()?;
            let u = extract_features(&scaled, &point);
            let y = ttc.tie_flows.iter().map(|(_, f)| *f).collect();
            Some((u, y))
        })
        .collect();

    let total = rows.len();
    let kept: Vec<&(Vec<f64>, Vec<f64>)> = rows.iter().flatten().collect();
    let dropped = total - kept.len();
    if kept.is_empty() || dropped * 2 > total {
        return Err(DatasetError::Degenerate { dropped, total });
    }
    let n = kept.len();
    let d = kept[0].0.len();
    let k = kept[0].1.len();
    let mut features = DMatrix::zeros(n, d);
    let mut targets = DMatrix::zeros(n, k);
    for (r, (u, y)) in kept.iter().enumerate() {
        for (c, &v) in u.iter().enumerate() {
            features[(r, c)] = v;
        }
        for (c, &v) in y.iter().enumerate() {
            targets[(r, c)] = v;
        }
    }
    let n_train = ((n as f64) * split_fraction).round() as usize;
    let n_train = n_train.clamp(1, n);
    let norm = Normalization::fit(&features, &targets, n_train);
    Ok(TrainingDataset {
        feature_names: feature_names(case),
        target_names: case.tie_lines.iter().map(|t| t.line.clone()).collect(),
        features,
        targets,
        n_train,
        norm,
        case_hash: case_hash(case),
        dropped,
    })
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    feature_names: Vec<String>,
    target_names: Vec<String>,
    n_train: usize,
    norm: Normalization,
    case_hash: String,
    dropped: usize,
    sampling: Option<SamplingConfig>,
}

/// Writes `<stem>.csv` (features then targets, full round-trip precision)
/// and `<stem>.json` (ordering, split, normalization, hashes).
pub fn save_dataset(
    dataset: &TrainingDataset,
    stem: &std::path::Path,
    sampling: Option<&SamplingConfig>,
) -> Result<(), DatasetError> {
    let mut csv = String::new();
    for (i, name) in dataset.feature_names.iter().enumerate() {
        if i > 0 {
            csv.push(',');
        }
        csv.push_str(name);
    }
    for name in &dataset.target_names {
        csv.push(',');
        csv.push_str(&format!("limit:{name}"));
    }
    csv.push('\n');
    for r in 0..dataset.n_samples() {
        for c in 0..dataset.features.ncols() {
            if c > 0 {
                csv.push(',');
            }
            csv.push_str(&format!("{}", dataset.features[(r, c)]));
        }
        for c in 0..dataset.targets.ncols() {
            csv.push_str(&format!(",{}", dataset.targets[(r, c)]));
        }
        csv.push('\n');
    }
    let io = |e: std::io::Error| DatasetError::Io(e.to_string());
    std::fs::write(stem.with_extension("csv"), csv).map_err(io)?;
    let sidecar = Sidecar {
        feature_names: dataset.feature_names.clone(),
        target_names: dataset.target_names.clone(),
        n_train: dataset.n_train,
        norm: dataset.norm.clone(),
        case_hash: dataset.case_hash.clone(),
        dropped: dataset.dropped,
        sampling: sampling.cloned(),
    };
    let text = serde_json::to_string_pretty(&sidecar).map_err(|e| DatasetError::Io(e.to_string()))?;
    std::fs::write(stem.with_extension("json"), text).map_err(io)?;
    Ok(())
}

/// Reads a dataset written by [`save_dataset`].
pub fn load_dataset(stem: &std::path::Path) -> Result<TrainingDataset, DatasetError> {
    let io = |e: std::io::Error| DatasetError::Io(e.to_string());
    let text = std::fs::read_to_string(stem.with_extension("json")).map_err(io)?;
    let sidecar: Sidecar =
        serde_json::from_str(&text).map_err(|e| DatasetError::Io(e.to_string()))?;
    let csv = std::fs::read_to_string(stem.with_extension("csv")).map_err(io)?;
    let mut lines = csv.lines();
    let header = lines.next().ok_or_else(|| DatasetError::Io("empty csv".into()))?;
    let cols: Vec<&str> = header.split(',').collect();
    let d = sidecar.feature_names.len();
    let k = sidecar.target_names.len();
    if cols.len() != d + k {
        return Err(DatasetError::Io(format!(
            "csv has {} columns, sidecar describes {}",
            cols.len(),
            d + k
        )));
    }
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for line in lines {
        if line.is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split(',')
            .map(|v| v.parse().map_err(|e| DatasetError::Io(format!("bad number: {e}"))))
            .collect::<Result<_, _>>()?;
        if vals.len() != d + k {
            return Err(DatasetError::Io("ragged csv row".into()));
        }
        rows.push(vals);
    }
    let n = rows.len();
    let mut features = DMatrix::zeros(n, d);
    let mut targets = DMatrix::zeros(n, k);
    for (r, vals) in rows.iter().enumerate() {
        for c in 0..d {
            features[(r, c)] = vals[c];
        }
        for c in 0..k {
            targets[(r, c)] = vals[d + c];
        }
    }
    Ok(TrainingDataset {
        feature_names: sidecar.feature_names,
        target_names: sidecar.target_names,
        features,
        targets,
        n_train: sidecar.n_train,
        norm: sidecar.norm,
        case_hash: sidecar.case_hash,
        dropped: sidecar.dropped,
    })
}
