//! Time-domain transient simulation of post-fault behavior with a
//! classical machine model: second-order swing dynamics behind transient
//! reactance, constant-impedance loads frozen at the initial state and
//! constant-power wind/storage injections. The rotor-angle criterion is
//! evaluated against the inertia-weighted center-of-inertia reference.

mod sim;

#[cfg(test)]
mod tests;

pub use sim::simulate;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Synchronous frequency, rad/s.
pub const OMEGA_S: f64 = 2.0 * std::f64::consts::PI * 60.0;

#[derive(Debug, Error)]
pub enum SimulationError {
    #[error("invalid contingency: {0}")]
    InvalidContingency(String),
    #[error("network solution collapsed at t = {time:.3} s")]
    Collapse { time: f64 },
    #[error("empty machine set")]
    EmptyMachineSet,
    #[error(transparent)]
    Grid(#[from] crate::grid::GridError),
}

/// A three-phase solid short applied at the `from`-side bus of the listed
/// line, cleared after `clearing_time` seconds, optionally tripping the
/// line at clearing.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContingencySpec {
    pub from: crate::grid::BusId,
    pub to: crate::grid::BusId,
    /// Fault application time, s.
    #[serde(default)]
    pub fault_time: f64,
    pub clearing_time: f64,
    /// Whether the faulted line is removed at clearing (else restored).
    #[serde(default = "default_trip")]
    pub trip_line: bool,
}

fn default_trip() -> bool {
    true
}

impl ContingencySpec {
    pub fn new(from: crate::grid::BusId, to: crate::grid::BusId) -> Self {
        ContingencySpec {
            from,
            to,
            fault_time: 0.0,
            clearing_time: 0.1,
            trip_line: true,
        }
    }

    pub fn label(&self) -> String {
        format!("{}-{}", self.from, self.to)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IntegrationScheme {
    Trapezoidal,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationConfig {
    /// Horizon, s.
    pub t_end: f64,
    /// Fixed integration step, s.
    pub dt: f64,
    pub scheme: IntegrationScheme,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            t_end: 3.0,
            dt: 0.05,
            scheme: IntegrationScheme::Trapezoidal,
        }
    }
}

/// Rotor-angle security threshold relative to the center of inertia, rad.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StabilityCriterion {
    pub delta_max: f64,
}

impl Default for StabilityCriterion {
    fn default() -> Self {
        StabilityCriterion {
            delta_max: std::f64::consts::PI,
        }
    }
}

/// Simulated machine trajectories on a shared time grid. Angles in rad,
/// speeds as deviation from synchronous in rad/s.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub time: Vec<f64>,
    pub machine_ids: Vec<String>,
    pub inertias: Vec<f64>,
    /// angles[step][machine]
    pub angles: Vec<Vec<f64>>,
    pub speeds: Vec<Vec<f64>>,
    pub coi: Vec<f64>,
}

impl Trajectory {
    /// CSV layout: time, one column per machine angle, then the COI angle.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("time_s");
        for id in &self.machine_ids {
            out.push_str(&format!(",angle_{id}_rad"));
        }
        out.push_str(",coi_rad\n");
        for (k, &t) in self.time.iter().enumerate() {
            out.push_str(&format!("{t:.6}"));
            for a in &self.angles[k] {
                out.push_str(&format!(",{a:.9}"));
            }
            out.push_str(&format!(",{:.9}\n", self.coi[k]));
        }
        out
    }
}

/// Inertia-weighted mean rotor angle.
pub fn coi_angle(angles: &[f64], inertias: &[f64]) -> Result<f64, SimulationError> {
    if angles.is_empty() || angles.len() != inertias.len() {
        return Err(SimulationError::EmptyMachineSet);
    }
    let total: f64 = inertias.iter().sum();
    if total <= 0.0 {
        return Err(SimulationError::EmptyMachineSet);
    }
    Ok(angles
        .iter()
        .zip(inertias)
        .map(|(a, m)| a * m)
        .sum::<f64>()
        / total)
}

#[derive(Debug, Clone, Copy)]
pub struct StabilityVerdict {
    pub stable: bool,
    /// max over time and machines of |delta_i - delta_COI|, rad.
    pub worst_excursion: f64,
}

/// Evaluates the rotor-angle criterion at every sample: stable iff
/// |delta_i - delta_COI| < delta_max strictly for all machines and times.
pub fn check_stability(traj: &Trajectory, criterion: &StabilityCriterion) -> StabilityVerdict {
    let mut worst = 0.0f64;
    for (k, row) in traj.angles.iter().enumerate() {
        let coi = traj.coi[k];
        for &a in row {
            worst = worst.max((a - coi).abs());
        }
    }
    StabilityVerdict {
        stable: worst < criterion.delta_max,
        worst_excursion: worst,
    }
}
