//! Transfer-capability constrained operational planning toolkit.
//!
//! The crate is organized as a pipeline:
//!
//! * [`grid`] — static network model, admittance construction, Newton-Raphson
//!   AC power flow and analytic line-flow derivatives.
//! * [`dynamics`] — classical-model time-domain transient simulation and the
//!   rotor-angle stability criterion.
//! * [`ttc`] — repeated-power-flow transfer capability search over a
//!   contingency set.
//! * [`dataset`] — quasi-random operating-condition sampling, feature
//!   extraction and labeled dataset construction.
//! * [`surrogate`] — elastic-net and neural-network transfer-limit
//!   estimators with exact input Jacobians and Hessians.
//! * [`ipm`] — primal-dual interior point solver for smooth NLPs with
//!   equality constraints and two-sided inequalities.
//! * [`planner`] — rolling-horizon dispatch problem assembly, solution and
//!   post-hoc security verification.

pub mod dataset;
pub mod dynamics;
pub mod grid;
pub mod surrogate;
pub mod ttc;

pub mod cases;

#[cfg(test)]
pub(crate) fn test_rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform draw in [-1, 1] for randomized derivative checks.
#[cfg(test)]
pub(crate) fn unit_rand(rng: &mut rand_chacha::ChaCha8Rng) -> f64 {
    use rand::Rng;
    rng.gen_range(-1.0..1.0)
}
