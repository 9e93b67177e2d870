use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{ContingencySpec, SimulationConfig, SimulationError, Trajectory, OMEGA_S};
use crate::grid::{NetworkCase, NetworkIndex, OperatingPoint};

/// Converter-interfaced devices hold constant power only while their bus
/// voltage stays above this level; below it the injection derates with
/// |V|^2 (current limiting), which also keeps the algebraic network
/// solvable through bolted faults.
const DEVICE_LVRT_VOLTAGE: f64 = 0.5;

/// Network reduced to machine internal nodes plus constant-power device
/// buses, for one topology phase.
struct ReducedNetwork {
    /// y_red[(i, j)] over kept nodes: machines first, then device buses.
    y: DMatrix<Complex64>,
    n_machines: usize,
    /// Constant complex injection at each kept device bus.
    device_s: Vec<Complex64>,
    /// Initial voltage guess for device buses.
    device_v0: Vec<Complex64>,
}

struct Machine {
    emf: f64,
    delta0: f64,
    p_m: f64,
    m: f64,
    damping: f64,
}

/// Builds the augmented admittance (buses + machine internal nodes), folds
/// loads into constant shunt admittances, applies the topology variant and
/// reduces to the kept node set.
#[allow(clippy::too_many_arguments)]
fn reduce_network(
    case: &NetworkCase,
    index: &NetworkIndex,
    point: &OperatingPoint,
    machines: &[Machine],
    device_buses: &[usize],
    device_s: &[Complex64],
    skip_lines: &[usize],
    grounded_bus: Option<usize>,
) -> Result<ReducedNetwork, SimulationError> {
    let n_bus = case.buses.len();
    let n_gen = case.generators.len();
    let n_aug = n_bus + n_gen;
    let ybus = crate::grid::build_admittance_indexed_pub(case, index, skip_lines);
    let mut y = DMatrix::<Complex64>::zeros(n_aug, n_aug);
    for i in 0..n_bus {
        for &(j, v) in ybus.row(i) {
            y[(i, j)] += v;
        }
        // Load as constant impedance frozen at the initial voltage.
        let bus = &case.buses[i];
        if bus.p_load != 0.0 || bus.q_load != 0.0 {
            let v2 = point.vm[i] * point.vm[i];
            y[(i, i)] += Complex64::new(bus.p_load, -bus.q_load) / v2;
        }
    }
    for (g, generator) in case.generators.iter().enumerate() {
        let t = index.bus(generator.bus).expect("validated");
        let yg = 1.0 / Complex64::new(0.0, generator.xd_transient);
        let k = n_bus + g;
        y[(k, k)] += yg;
        y[(t, t)] += yg;
        y[(k, t)] -= yg;
        y[(t, k)] -= yg;
    }

    // Bolted fault: the grounded node's voltage is zero, so its row and
    // column simply drop out of every other node's equations.
    let grounded = grounded_bus;
    let keep: Vec<usize> = (n_bus..n_aug)
        .chain(device_buses.iter().copied().filter(|&b| Some(b) != grounded))
        .collect();
    let elim: Vec<usize> = (0..n_bus)
        .filter(|b| Some(*b) != grounded && !device_buses.contains(b))
        .collect();

    let pick = |rows: &[usize], cols: &[usize]| {
        DMatrix::from_fn(rows.len(), cols.len(), |i, j| y[(rows[i], cols[j])])
    };
    let y_kk = pick(&keep, &keep);
    let y_ke = pick(&keep, &elim);
    let y_ek = pick(&elim, &keep);
    let y_ee = pick(&elim, &elim);
    let lu = y_ee.lu();
    let Some(x) = lu.solve(&y_ek) else {
        return Err(SimulationError::Collapse { time: 0.0 });
    };
    let y_red = y_kk - y_ke * x;

    // Device bookkeeping for the kept (non-grounded) devices.
    let mut s = Vec::new();
    let mut v0 = Vec::new();
    for (k, &b) in device_buses.iter().enumerate() {
        if Some(b) != grounded {
            s.push(device_s[k]);
            v0.push(Complex64::from_polar(point.vm[b], point.va[b]));
        }
    }
    Ok(ReducedNetwork {
        y: y_red,
        n_machines: machines.len(),
        device_s: s,
        device_v0: v0,
    })
}

impl ReducedNetwork {
    /// Electrical power at each machine's internal node for the given rotor
    /// angles. Device-bus voltages are solved by Newton iteration on the
    /// constant-power mismatch, warm-started from `device_v`.
    fn electrical_power(
        &self,
        machines: &[Machine],
        delta: &[f64],
        device_v: &mut Vec<Complex64>,
        time: f64,
    ) -> Result<Vec<f64>, SimulationError> {
        let nm = self.n_machines;
        let nd = self.device_s.len();
        let vm: Vec<Complex64> = (0..nm)
            .map(|g| Complex64::from_polar(machines[g].emf, delta[g]))
            .collect();

        if nd > 0 {
            // rhs_w = sum over machines of Y[w, m] * E_m
            let rhs: Vec<Complex64> = (0..nd)
                .map(|w| (0..nm).map(|m| self.y[(nm + w, m)] * vm[m]).sum())
                .collect();
            let vth2 = DEVICE_LVRT_VOLTAGE * DEVICE_LVRT_VOLTAGE;
            let mut v = device_v.clone();
            let mut converged = false;
            for _ in 0..25 {
                let i_w: Vec<Complex64> = (0..nd)
                    .map(|w| {
                        rhs[w]
                            + (0..nd)
                                .map(|u| self.y[(nm + w, nm + u)] * v[u])
                                .sum::<Complex64>()
                    })
                    .collect();
                let target = |w: usize, vw: Complex64| {
                    let scale = (vw.norm_sqr() / vth2).min(1.0);
                    self.device_s[w] * scale
                };
                let mismatch: Vec<Complex64> = (0..nd)
                    .map(|w| v[w] * i_w[w].conj() - target(w, v[w]))
                    .collect();
                let worst = mismatch.iter().map(|c| c.norm()).fold(0.0, f64::max);
                if worst < 1e-10 {
                    converged = true;
                    break;
                }
                // Real-valued Newton on [Re V; Im V].
                let mut jac = DMatrix::<f64>::zeros(2 * nd, 2 * nd);
                for w in 0..nd {
                    for u in 0..nd {
                        let yuw = self.y[(nm + w, nm + u)];
                        let mut d_re = v[w] * yuw.conj();
                        let mut d_im = -Complex64::i() * v[w] * yuw.conj();
                        if u == w {
                            d_re += i_w[w].conj();
                            d_im += Complex64::i() * i_w[w].conj();
                            if v[w].norm_sqr() < vth2 {
                                d_re -= self.device_s[w] * 2.0 * v[w].re / vth2;
                                d_im -= self.device_s[w] * 2.0 * v[w].im / vth2;
                            }
                        }
                        jac[(2 * w, 2 * u)] = d_re.re;
                        jac[(2 * w + 1, 2 * u)] = d_re.im;
                        jac[(2 * w, 2 * u + 1)] = d_im.re;
                        jac[(2 * w + 1, 2 * u + 1)] = d_im.im;
                    }
                }
                let mut f = nalgebra::DVector::<f64>::zeros(2 * nd);
                for w in 0..nd {
                    f[2 * w] = -mismatch[w].re;
                    f[2 * w + 1] = -mismatch[w].im;
                }
                let Some(dx) = jac.lu().solve(&f) else {
                    return Err(SimulationError::Collapse { time });
                };
                if !dx.iter().all(|x| x.is_finite()) {
                    return Err(SimulationError::Collapse { time });
                }
                for w in 0..nd {
                    v[w] += Complex64::new(dx[2 * w], dx[2 * w + 1]);
                }
            }
            if !converged {
                return Err(SimulationError::Collapse { time });
            }
            *device_v = v;
        }

        let p_e = (0..nm)
            .map(|g| {
                let mut i_g: Complex64 = (0..nm).map(|m| self.y[(g, m)] * vm[m]).sum();
                for (u, vu) in device_v.iter().enumerate().take(nd) {
                    i_g += self.y[(g, nm + u)] * vu;
                }
                (vm[g] * i_g.conj()).re
            })
            .collect();
        Ok(p_e)
    }
}

/// Simulates post-fault rotor dynamics through the fault-on and post-fault
/// networks with an implicit trapezoidal scheme on a fixed step. The first
/// sample reproduces the supplied steady state.
pub fn simulate(
    case: &NetworkCase,
    point: &OperatingPoint,
    contingency: &ContingencySpec,
    config: &SimulationConfig,
) -> Result<Trajectory, SimulationError> {
    if config.dt <= 0.0 || config.dt >= config.t_end {
        return Err(SimulationError::InvalidContingency(
            "integration step must lie in (0, t_end)".into(),
        ));
    }
    if contingency.clearing_time < 0.0 || contingency.fault_time < 0.0 {
        return Err(SimulationError::InvalidContingency(
            "fault and clearing times must be nonnegative".into(),
        ));
    }
    let index = case.index();
    let faulted_line = case
        .lines
        .iter()
        .position(|l| {
            (l.from == contingency.from && l.to == contingency.to)
                || (l.from == contingency.to && l.to == contingency.from)
        })
        .ok_or_else(|| {
            SimulationError::InvalidContingency(format!(
                "no line between buses {} and {}",
                contingency.from, contingency.to
            ))
        })?;
    let fault_bus = index.bus(contingency.from)?;
    if case.generators.is_empty() {
        return Err(SimulationError::EmptyMachineSet);
    }

    // Machine constants from the operating point: constant EMF behind
    // transient reactance, mechanical power frozen at the electrical power.
    let machines: Vec<Machine> = case
        .generators
        .iter()
        .enumerate()
        .map(|(g, generator)| {
            let b = index.bus(generator.bus).expect("validated");
            let v = Complex64::from_polar(point.vm[b], point.va[b]);
            let s = Complex64::new(point.gen_p[g], point.gen_q[g]);
            let i = (s / v).conj();
            let e = v + Complex64::new(0.0, generator.xd_transient) * i;
            Machine {
                emf: e.norm(),
                delta0: e.arg(),
                p_m: point.gen_p[g],
                m: 2.0 * generator.inertia / OMEGA_S,
                damping: generator.damping,
            }
        })
        .collect();

    // Device buses carrying constant P/Q injections during the transient.
    let mut device_s_by_bus = vec![Complex64::default(); case.buses.len()];
    for (w, farm) in case.wind_farms.iter().enumerate() {
        device_s_by_bus[index.bus(farm.bus)?] += Complex64::new(point.wind_p[w], 0.0);
    }
    for (e, ess) in case.ess_units.iter().enumerate() {
        device_s_by_bus[index.bus(ess.bus)?] += Complex64::new(point.ess_p[e], 0.0);
    }
    let device_buses: Vec<usize> = (0..case.buses.len())
        .filter(|&b| device_s_by_bus[b].norm() > 1e-9)
        .collect();
    let device_s: Vec<Complex64> = device_buses.iter().map(|&b| device_s_by_bus[b]).collect();

    let faulted = contingency.clearing_time > 0.0;
    let t_fault = contingency.fault_time;
    let t_clear = t_fault + contingency.clearing_time;
    let pre = reduce_network(case, &index, point, &machines, &device_buses, &device_s, &[], None)?;
    let fault_on = if faulted {
        Some(reduce_network(
            case,
            &index,
            point,
            &machines,
            &device_buses,
            &device_s,
            &[],
            Some(fault_bus),
        )?)
    } else {
        None
    };
    let post = if faulted && contingency.trip_line {
        Some(reduce_network(
            case,
            &index,
            point,
            &machines,
            &device_buses,
            &device_s,
            &[faulted_line],
            None,
        )?)
    } else {
        None
    };
    let network_at = |t: f64| -> (&ReducedNetwork, usize) {
        if faulted && t >= t_fault && t < t_clear {
            (fault_on.as_ref().unwrap(), 1)
        } else if faulted && t >= t_clear {
            (post.as_ref().unwrap_or(&pre), 2)
        } else {
            (&pre, 0)
        }
    };

    // Integration grid: multiples of dt unioned with the switching times.
    let mut grid = Vec::new();
    let mut t = 0.0;
    while t < config.t_end - 1e-12 {
        grid.push(t);
        t += config.dt;
    }
    grid.push(config.t_end);
    if faulted {
        for event in [t_fault, t_clear] {
            if event > 0.0
                && event < config.t_end
                && !grid.iter().any(|&g| (g - event).abs() < 1e-9)
            {
                grid.push(event);
            }
        }
    }
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let nm = machines.len();
    let inertias: Vec<f64> = machines.iter().map(|m| m.m).collect();
    let mut delta: Vec<f64> = machines.iter().map(|m| m.delta0).collect();
    let mut omega = vec![0.0; nm];
    // Per-phase warm starts seeded from the steady-state voltages so a
    // topology switch never drags the solution onto the low-voltage root.
    let mut device_vs: Vec<Vec<Complex64>> = vec![
        pre.device_v0.clone(),
        fault_on.as_ref().map(|n| n.device_v0.clone()).unwrap_or_default(),
        post.as_ref().unwrap_or(&pre).device_v0.clone(),
    ];

    let mut traj = Trajectory {
        time: Vec::with_capacity(grid.len()),
        machine_ids: case.generators.iter().map(|g| g.id.clone()).collect(),
        inertias: inertias.clone(),
        angles: Vec::with_capacity(grid.len()),
        speeds: Vec::with_capacity(grid.len()),
        coi: Vec::with_capacity(grid.len()),
    };
    let record = |traj: &mut Trajectory,
                  t: f64,
                  delta: &[f64],
                  omega: &[f64]|
     -> Result<(), SimulationError> {
        traj.time.push(t);
        traj.angles.push(delta.to_vec());
        traj.speeds.push(omega.to_vec());
        traj.coi.push(super::coi_angle(delta, &inertias)?);
        Ok(())
    };
    record(&mut traj, grid[0], &delta, &omega)?;

    let accel = |net: &ReducedNetwork,
                 delta: &[f64],
                 omega: &[f64],
                 device_v: &mut Vec<Complex64>,
                 t: f64|
     -> Result<Vec<f64>, SimulationError> {
        let p_e = net.electrical_power(&machines, delta, device_v, t)?;
        Ok((0..nm)
            .map(|g| (machines[g].p_m - p_e[g] - machines[g].damping * omega[g]) / machines[g].m)
            .collect())
    };

    for step in 1..grid.len() {
        let t0 = grid[step - 1];
        let t1 = grid[step];
        let h = t1 - t0;
        let (net, phase) = network_at(t0 + 1e-12);
        let device_v = &mut device_vs[phase];
        let a0 = accel(net, &delta, &omega, device_v, t0)?;

        // Trapezoidal corrector solved by fixed-point iteration.
        let mut delta_star: Vec<f64> = (0..nm).map(|g| delta[g] + h * omega[g]).collect();
        let mut omega_star: Vec<f64> = (0..nm).map(|g| omega[g] + h * a0[g]).collect();
        let mut converged = false;
        for _ in 0..60 {
            let a1 = accel(net, &delta_star, &omega_star, device_v, t1)?;
            let mut max_d = 0.0f64;
            for g in 0..nm {
                let d_new = delta[g] + 0.5 * h * (omega[g] + omega_star[g]);
                let w_new = omega[g] + 0.5 * h * (a0[g] + a1[g]);
                max_d = max_d.max((d_new - delta_star[g]).abs() + (w_new - omega_star[g]).abs());
                delta_star[g] = d_new;
                omega_star[g] = w_new;
            }
            if max_d < 1e-11 {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(SimulationError::Collapse { time: t1 });
        }
        delta = delta_star;
        omega = omega_star;
        record(&mut traj, t1, &delta, &omega)?;
    }
    Ok(traj)
}
