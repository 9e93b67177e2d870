//! Static network model, admittance construction, AC power flow and
//! analytic derivatives of branch flows with respect to the voltage state.
//!
//! All quantities are per-unit on the case MVA base; megawatts appear only
//! at file boundaries. Operations are pure functions over immutable case
//! data and may be called concurrently.

mod case;
mod flows;
mod powerflow;
mod schema;
mod ybus;

#[cfg(test)]
mod tests;

pub use case::{
    Bus, BusId, BusKind, EssUnit, Generator, Line, NetworkCase, NetworkIndex, OperatingPoint,
    TieLine, WindFarm,
};
pub use flows::{
    directed_line_flow, directed_line_flow_derivatives, line_flow, line_flow_derivatives,
    power_injections, weighted_injection_hessian, BalanceJacobian, FlowDerivatives, StateVar,
};
pub use powerflow::{power_mismatch, solve_power_flow, PowerFlowConfig};
pub use ybus::{build_admittance, AdmittanceMatrix};

pub(crate) use flows::{flow_derivatives_indexed, line_flow_indexed};
pub(crate) use ybus::build_admittance_indexed as build_admittance_indexed_pub;

use thiserror::Error;

/// Errors produced by network model construction and power flow.
#[derive(Debug, Error)]
pub enum GridError {
    #[error("invalid case: {0}")]
    InvalidCase(String),
    #[error("duplicate line {id} between buses {from} and {to}")]
    DuplicateLine { id: String, from: BusId, to: BusId },
    #[error("unknown bus {0}")]
    UnknownBus(BusId),
    #[error("unknown line {0}")]
    UnknownLine(String),
    #[error("power flow diverged after {iterations} iterations, mismatch {mismatch:.3e} p.u.")]
    Diverged { iterations: usize, mismatch: f64 },
    #[error("singular power flow Jacobian at iteration {iteration}")]
    SingularJacobian { iteration: usize },
    #[error("case file: {0}")]
    Io(String),
}
