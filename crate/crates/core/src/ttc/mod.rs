//! Repeated-power-flow transfer capability: find the largest transfer
//! scaling that keeps the system statically feasible and transiently
//! stable under every contingency, then read the corridor flows at that
//! loading.


use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{
    check_stability, simulate, ContingencySpec, SimulationConfig, StabilityCriterion,
};
use crate::grid::{
    directed_line_flow, solve_power_flow, GridError, NetworkCase, OperatingPoint, PowerFlowConfig,
    TieLine,
};

#[derive(Debug, Error)]
pub enum TtcError {
    #[error("base operating point infeasible: {0:?}")]
    BaseInfeasible(BindingTag),
    #[error("source capacity exhausted: needed {needed:.3} p.u., available {available:.3} p.u.")]
    CapacityExhausted { needed: f64, available: f64 },
    #[error("case has no sink-area load to scale")]
    NoSinkLoad,
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Which check failed just above the feasibility boundary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum BindingTag {
    Unconstrained,
    PowerFlow,
    Voltage { bus: u32 },
    Thermal { line: String },
    GeneratorQ { gen: String },
    Transient { contingency: String },
    CapacityExhausted,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TtcSearchConfig {
    /// Upper bound of the transfer scaling search.
    pub lambda_cap: f64,
    /// Bisection tolerance on lambda.
    pub tolerance: f64,
    pub check_voltage: bool,
    pub check_thermal: bool,
    pub check_gen_q: bool,
    pub contingencies: Vec<ContingencySpec>,
    pub criterion: StabilityCriterion,
    pub sim: SimulationConfig,
    /// Search below the current transfer when the base point itself is
    /// insecure (used by verification and corrective re-dispatch).
    pub allow_negative: bool,
}

impl Default for TtcSearchConfig {
    fn default() -> Self {
        TtcSearchConfig {
            lambda_cap: 1.0,
            tolerance: 0.01,
            check_voltage: true,
            check_thermal: true,
            check_gen_q: true,
            contingencies: Vec::new(),
            criterion: StabilityCriterion::default(),
            sim: SimulationConfig::default(),
            allow_negative: false,
        }
    }
}

/// Transfer capability at one operating condition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TtcResult {
    pub lambda_star: f64,
    /// Per-tie-line transfer at lambda_star, measured at the source end,
    /// p.u.
    pub tie_flows: Vec<(String, f64)>,
    pub binding: BindingTag,
    /// Set when a probe above the first infeasibility came back feasible,
    /// i.e. feasibility was not monotone in lambda.
    pub monotone_warning: bool,
}

/// Scales the sink-area load to (1 + lambda) times base at constant power
/// factor and dispatches the increment to source-area generators in
/// proportion to their remaining headroom. The slack machine is left to
/// absorb losses.
pub fn scale_transfer(
    case: &NetworkCase,
    point: &OperatingPoint,
    lambda: f64,
) -> Result<(NetworkCase, OperatingPoint), TtcError> {
    let mut scaled = case.clone();
    let mut guess = point.clone();
    if lambda == 0.0 {
        return Ok((scaled, guess));
    }
    let index = case.index();
    let sink: Vec<usize> = case
        .sink_buses
        .iter()
        .map(|&b| index.bus(b))
        .collect::<Result<_, _>>()
        .map_err(TtcError::Grid)?;
    let base_load: f64 = sink.iter().map(|&i| case.buses[i].p_load).sum();
    if base_load <= 0.0 {
        return Err(TtcError::NoSinkLoad);
    }
    for &i in &sink {
        scaled.buses[i].p_load = case.buses[i].p_load * (1.0 + lambda);
        scaled.buses[i].q_load = case.buses[i].q_load * (1.0 + lambda);
    }
    let increment = lambda * base_load;

    let slack_bus = case.buses[index.slack].id;
    let source_gens: Vec<usize> = case
        .generators
        .iter()
        .enumerate()
        .filter(|(_, g)| case.source_buses.contains(&g.bus) && g.bus != slack_bus)
        .map(|(i, _)| i)
        .collect();
    if increment > 0.0 {
        let headroom: Vec<f64> = source_gens
            .iter()
            .map(|&g| (case.generators[g].p_max - point.gen_p[g]).max(0.0))
            .collect();
        let total: f64 = headroom.iter().sum();
        if total + 1e-12 < increment {
            return Err(TtcError::CapacityExhausted {
                needed: increment,
                available: total,
            });
        }
        for (k, &g) in source_gens.iter().enumerate() {
            let add = increment * headroom[k] / total;
            guess.gen_p[g] = point.gen_p[g] + add;
            scaled.generators[g].p = guess.gen_p[g];
        }
    } else {
        // Downward search backs source machines off toward their floors.
        let room: Vec<f64> = source_gens
            .iter()
            .map(|&g| (point.gen_p[g] - case.generators[g].p_min).max(0.0))
            .collect();
        let total: f64 = room.iter().sum();
        if total + 1e-12 < -increment {
            return Err(TtcError::CapacityExhausted {
                needed: -increment,
                available: total,
            });
        }
        for (k, &g) in source_gens.iter().enumerate() {
            let sub = -increment * room[k] / total;
            guess.gen_p[g] = point.gen_p[g] - sub;
            scaled.generators[g].p = guess.gen_p[g];
        }
    }
    Ok((scaled, guess))
}

/// Outcome of one feasibility assessment.
#[derive(Debug, Clone)]
pub struct Assessment {
    pub feasible: bool,
    pub tag: BindingTag,
    pub point: Option<OperatingPoint>,
}

/// True iff the power flow converges, the enabled static limits hold and
/// the system rides through every contingency. Contingency simulations run
/// concurrently.
pub fn assess_feasible(
    case: &NetworkCase,
    guess: &OperatingPoint,
    config: &TtcSearchConfig,
) -> Assessment {
    let pf = PowerFlowConfig::default();
    let point = match solve_power_flow(case, guess, &pf) {
        Ok(p) => p,
        Err(_) => {
            return Assessment {
                feasible: false,
                tag: BindingTag::PowerFlow,
                point: None,
            }
        }
    };
    if config.check_voltage {
        for (i, bus) in case.buses.iter().enumerate() {
            if point.vm[i] < bus.v_min - 1e-9 || point.vm[i] > bus.v_max + 1e-9 {
                return Assessment {
                    feasible: false,
                    tag: BindingTag::Voltage { bus: bus.id },
                    point: Some(point),
                };
            }
        }
    }
    if config.check_thermal {
        for (li, line) in case.lines.iter().enumerate() {
            let f = point.line_flow[li];
            if f < line.flow_min - 1e-9 || f > line.flow_max + 1e-9 {
                return Assessment {
                    feasible: false,
                    tag: BindingTag::Thermal {
                        line: line.id.clone(),
                    },
                    point: Some(point),
                };
            }
        }
    }
    if config.check_gen_q {
        for (g, generator) in case.generators.iter().enumerate() {
            let q = point.gen_q[g];
            if q < generator.q_min - 1e-6 || q > generator.q_max + 1e-6 {
                return Assessment {
                    feasible: false,
                    tag: BindingTag::GeneratorQ {
                        gen: generator.id.clone(),
                    },
                    point: Some(point),
                };
            }
        }
    }
    let unstable = config
        .contingencies
        .par_iter()
        .find_map_any(|contingency| {
            let stable = match simulate(case, &point, contingency, &config.sim) {
                Ok(traj) => check_stability(&traj, &config.criterion).stable,
                // A collapsed network solution counts as instability.
                Err(_) => false,
            };
            if stable {
                None
            } else {
                Some(contingency.label())
            }
        });
    if let Some(label) = unstable {
        return Assessment {
            feasible: false,
            tag: BindingTag::Transient { contingency: label },
            point: Some(point),
        };
    }
    Assessment {
        feasible: true,
        tag: BindingTag::Unconstrained,
        point: Some(point),
    }
}

fn assess_at(
    case: &NetworkCase,
    point: &OperatingPoint,
    lambda: f64,
    config: &TtcSearchConfig,
) -> Assessment {
    match scale_transfer(case, point, lambda) {
        Ok((scaled, guess)) => assess_feasible(&scaled, &guess, config),
        Err(TtcError::CapacityExhausted { .. }) => Assessment {
            feasible: false,
            tag: BindingTag::CapacityExhausted,
            point: None,
        },
        Err(_) => Assessment {
            feasible: false,
            tag: BindingTag::PowerFlow,
            point: None,
        },
    }
}

/// Largest feasible transfer scaling by coarse upward march plus bisection,
/// and the corridor flows at that scaling.
pub fn compute_ttc(
    case: &NetworkCase,
    point: &OperatingPoint,
    tie_lines: &[TieLine],
    config: &TtcSearchConfig,
) -> Result<TtcResult, TtcError> {
    let base = assess_at(case, point, 0.0, config);
    let (mut lo, mut hi, mut hi_tag) = if base.feasible {
        (0.0f64, None, BindingTag::Unconstrained)
    } else if config.allow_negative {
        // Walk down until the system becomes secure again.
        let mut lo = None;
        let step = 0.05f64;
        let mut k = 1;
        let floor = -0.95;
        while (-(k as f64) * step) > floor {
            let lambda = -(k as f64) * step;
            let a = assess_at(case, point, lambda, config);
            if a.feasible {
                lo = Some(lambda);
                break;
            }
            k += 1;
        }
        match lo {
            Some(l) => (l, Some(l + step), base.tag.clone()),
            None => return Err(TtcError::BaseInfeasible(base.tag)),
        }
    } else {
        return Err(TtcError::BaseInfeasible(base.tag));
    };

    if hi.is_none() {
        // Coarse march to bracket the boundary.
        let coarse = (config.lambda_cap / 8.0).max(config.tolerance);
        let mut lambda = lo;
        loop {
            let next = (lambda + coarse).min(config.lambda_cap);
            let a = assess_at(case, point, next, config);
            if a.feasible {
                lo = next;
                lambda = next;
                if next >= config.lambda_cap {
                    break;
                }
            } else {
                hi = Some(next);
                hi_tag = a.tag;
                break;
            }
        }
    }

    let mut monotone_warning = false;
    let lambda_star = match hi {
        None => config.lambda_cap,
        Some(mut h) => {
            while h - lo > config.tolerance {
                let mid = 0.5 * (lo + h);
                let a = assess_at(case, point, mid, config);
                if a.feasible {
                    lo = mid;
                } else {
                    h = mid;
                    hi_tag = a.tag;
                }
            }
            // One probe beyond the bracket flags non-monotone feasibility.
            let probe = 0.5 * (h + config.lambda_cap);
            if probe - h > config.tolerance && assess_at(case, point, probe, config).feasible {
                monotone_warning = true;
            }
            lo
        }
    };

    let (scaled, guess) = scale_transfer(case, point, lambda_star)?;
    let solved = solve_power_flow(&scaled, &guess, &PowerFlowConfig::default())?;
    let tie_flows = tie_lines
        .iter()
        .map(|t| {
            directed_line_flow(&scaled, &solved, &t.line, t.source_bus)
                .map(|f| (t.line.clone(), f))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(TtcResult {
        lambda_star,
        tie_flows,
        binding: hi_tag,
        monotone_warning,
    })
}
