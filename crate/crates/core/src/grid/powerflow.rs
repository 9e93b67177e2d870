use nalgebra::{DMatrix, DVector};

use super::case::{BusKind, NetworkCase, OperatingPoint};
use super::flows::{line_flow_indexed, power_injections};
use super::ybus::{build_admittance_indexed, AdmittanceMatrix};
use super::GridError;

#[derive(Debug, Clone)]
pub struct PowerFlowConfig {
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Enforce generator reactive limits by PV -> PQ switching with
    /// re-solve.
    pub enforce_q_limits: bool,
}

impl Default for PowerFlowConfig {
    fn default() -> Self {
        PowerFlowConfig {
            tolerance: 1e-8,
            max_iterations: 30,
            enforce_q_limits: true,
        }
    }
}

/// Largest absolute nodal power mismatch (p.u.) of a point: active power at
/// every non-slack bus, reactive power at PQ buses.
pub fn power_mismatch(case: &NetworkCase, point: &OperatingPoint) -> f64 {
    let index = case.index();
    let ybus = build_admittance_indexed(case, &index, &[]);
    let (p_sched, q_sched) = point.bus_injections(case, &index);
    let (p_calc, q_calc) = power_injections(&ybus, &point.vm, &point.va);
    let mut worst: f64 = 0.0;
    for (i, bus) in case.buses.iter().enumerate() {
        if bus.kind != BusKind::Slack {
            worst = worst.max((p_sched[i] - p_calc[i]).abs());
        }
        if bus.kind == BusKind::Pq {
            worst = worst.max((q_sched[i] - q_calc[i]).abs());
        }
    }
    worst
}

struct NewtonOutcome {
    vm: Vec<f64>,
    va: Vec<f64>,
    iterations: usize,
}

/// Polar Newton-Raphson on the injection mismatch equations. `kinds` may
/// differ from the case bus kinds when PV buses have been switched to PQ.
fn newton_loop(
    ybus: &AdmittanceMatrix,
    kinds: &[BusKind],
    p_sched: &[f64],
    q_sched: &[f64],
    vm0: &[f64],
    va0: &[f64],
    config: &PowerFlowConfig,
) -> Result<NewtonOutcome, GridError> {
    let n = kinds.len();
    let mut vm = vm0.to_vec();
    let mut va = va0.to_vec();

    let ang: Vec<usize> = (0..n).filter(|&i| kinds[i] != BusKind::Slack).collect();
    let mag: Vec<usize> = (0..n).filter(|&i| kinds[i] == BusKind::Pq).collect();
    let n_ang = ang.len();
    let dim = n_ang + mag.len();
    if dim == 0 {
        return Ok(NewtonOutcome {
            vm,
            va,
            iterations: 0,
        });
    }

    let mismatch = |vm: &[f64], va: &[f64]| -> DVector<f64> {
        let (p_calc, q_calc) = power_injections(ybus, vm, va);
        let mut f = DVector::zeros(dim);
        for (k, &i) in ang.iter().enumerate() {
            f[k] = p_sched[i] - p_calc[i];
        }
        for (k, &i) in mag.iter().enumerate() {
            f[n_ang + k] = q_sched[i] - q_calc[i];
        }
        f
    };

    let mut f = mismatch(&vm, &va);
    let mut norm = f.amax();
    let mut iterations = 0;
    while norm > config.tolerance {
        if iterations >= config.max_iterations {
            return Err(GridError::Diverged {
                iterations,
                mismatch: norm,
            });
        }
        iterations += 1;

        let jac = super::flows::BalanceJacobian::new(ybus, &vm, &va);
        let mut j = DMatrix::zeros(dim, dim);
        for (r, &i) in ang.iter().enumerate() {
            for (c, &k) in ang.iter().enumerate() {
                j[(r, c)] = jac.dp_dva(i, k);
            }
            for (c, &k) in mag.iter().enumerate() {
                j[(r, n_ang + c)] = jac.dp_dvm(i, k);
            }
        }
        for (r, &i) in mag.iter().enumerate() {
            for (c, &k) in ang.iter().enumerate() {
                j[(n_ang + r, c)] = jac.dq_dva(i, k);
            }
            for (c, &k) in mag.iter().enumerate() {
                j[(n_ang + r, n_ang + c)] = jac.dq_dvm(i, k);
            }
        }

        let lu = j.lu();
        let Some(dx) = lu.solve(&f) else {
            return Err(GridError::SingularJacobian { iteration: iterations });
        };
        if !dx.iter().all(|v| v.is_finite()) {
            return Err(GridError::SingularJacobian { iteration: iterations });
        }
        for (k, &i) in ang.iter().enumerate() {
            va[i] += dx[k];
        }
        for (k, &i) in mag.iter().enumerate() {
            vm[i] += dx[n_ang + k];
        }
        f = mismatch(&vm, &va);
        norm = f.amax();
        if !norm.is_finite() {
            return Err(GridError::Diverged {
                iterations,
                mismatch: norm,
            });
        }
    }
    Ok(NewtonOutcome {
        vm,
        va,
        iterations,
    })
}

/// Solves the AC power flow for the case starting from `guess`. PV voltage
/// setpoints are held; the slack bus absorbs the active-power residual.
/// With `enforce_q_limits` the solver switches reactive-limit-violating PV
/// buses to PQ at the binding limit and re-solves.
pub fn solve_power_flow(
    case: &NetworkCase,
    guess: &OperatingPoint,
    config: &PowerFlowConfig,
) -> Result<OperatingPoint, GridError> {
    case.validate()?;
    if guess.vm.iter().any(|&v| v <= 0.0) {
        return Err(GridError::InvalidCase(
            "initial guess has non-positive voltage".into(),
        ));
    }
    let index = case.index();
    let ybus = build_admittance_indexed(case, &index, &[]);

    let mut point = guess.clone();
    // Hold generator-bus voltage setpoints and the slack angle.
    let mut kinds: Vec<BusKind> = case.buses.iter().map(|b| b.kind).collect();
    for (i, bus) in case.buses.iter().enumerate() {
        if bus.kind != BusKind::Pq {
            if let Some(&g0) = index.gens_at_bus[i].first() {
                point.vm[i] = case.generators[g0].v_setpoint;
            }
            if bus.kind == BusKind::Slack {
                point.va[i] = 0.0;
            }
        }
    }

    let (p_sched, mut q_sched) = point.bus_injections(case, &index);

    let mut total_iterations = 0;
    loop {
        let out = newton_loop(&ybus, &kinds, &p_sched, &q_sched, &point.vm, &point.va, config)?;
        total_iterations += out.iterations;
        point.vm = out.vm;
        point.va = out.va;

        if !config.enforce_q_limits {
            break;
        }
        // Reactive generation implied at PV buses; switch the worst
        // violator to PQ pinned at its limit and re-solve.
        let (_, q_calc) = power_injections(&ybus, &point.vm, &point.va);
        let mut worst: Option<(usize, f64, f64)> = None;
        for (i, bus) in case.buses.iter().enumerate() {
            if kinds[i] != BusKind::Pv || bus.kind != BusKind::Pv {
                continue;
            }
            let gens = &index.gens_at_bus[i];
            if gens.is_empty() {
                continue;
            }
            let q_gen = q_calc[i] + case.buses[i].q_load;
            let q_min: f64 = gens.iter().map(|&g| case.generators[g].q_min).sum();
            let q_max: f64 = gens.iter().map(|&g| case.generators[g].q_max).sum();
            let (viol, pin) = if q_gen > q_max + config.tolerance {
                (q_gen - q_max, q_max)
            } else if q_gen < q_min - config.tolerance {
                (q_min - q_gen, q_min)
            } else {
                continue;
            };
            if worst.map(|(_, v, _)| viol > v).unwrap_or(true) {
                worst = Some((i, viol, pin));
            }
        }
        match worst {
            Some((i, _, pin)) => {
                kinds[i] = BusKind::Pq;
                q_sched[i] = pin - case.buses[i].q_load;
            }
            None => break,
        }
    }
    log::debug!(
        "power flow converged in {total_iterations} Newton iterations ({})",
        case.name
    );

    // Recover device outputs from the solved voltages.
    let (p_calc, q_calc) = power_injections(&ybus, &point.vm, &point.va);
    for (i, _) in case.buses.iter().enumerate() {
        let gens = &index.gens_at_bus[i];
        if gens.is_empty() {
            continue;
        }
        // Reactive bus generation split in proportion to each machine's
        // range; wind and storage run at unity power factor.
        let q_gen = q_calc[i] + case.buses[i].q_load;
        let ranges: Vec<f64> = gens
            .iter()
            .map(|&g| (case.generators[g].q_max - case.generators[g].q_min).max(0.0))
            .collect();
        let total_range: f64 = ranges.iter().sum();
        for (k, &g) in gens.iter().enumerate() {
            let share = if total_range > 0.0 {
                ranges[k] / total_range
            } else {
                1.0 / gens.len() as f64
            };
            point.gen_q[g] = q_gen * share;
        }
        if i == index.slack {
            // The first slack machine absorbs the active residual on top of
            // the scheduled outputs.
            let device_p: f64 = index.wind_at_bus[i]
                .iter()
                .map(|&w| point.wind_p[w])
                .chain(index.ess_at_bus[i].iter().map(|&e| point.ess_p[e]))
                .sum();
            let p_gen = p_calc[i] + case.buses[i].p_load - device_p;
            let scheduled: f64 = gens.iter().map(|&g| point.gen_p[g]).sum();
            point.gen_p[gens[0]] += p_gen - scheduled;
        }
    }
    for (li, _) in case.lines.iter().enumerate() {
        point.line_flow[li] = line_flow_indexed(case, &index, &point.vm, &point.va, li, true);
    }
    Ok(point)
}
