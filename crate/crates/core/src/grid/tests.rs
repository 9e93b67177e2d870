use approx::assert_abs_diff_eq;
use num_complex::Complex64;

use super::*;
use crate::cases;

#[test]
fn admittance_single_branch() {
    let case = cases::two_bus(0.0);
    let y = build_admittance(&case).unwrap();
    // Series admittance of x = 0.1 is -j10; the matrix carries it negated
    // off-diagonal.
    assert_abs_diff_eq!(y.get(0, 0).im, -10.0, epsilon = 1e-12);
    assert_abs_diff_eq!(y.get(1, 1).im, -10.0, epsilon = 1e-12);
    assert_abs_diff_eq!(y.get(0, 1).im, 10.0, epsilon = 1e-12);
    assert_abs_diff_eq!(y.get(1, 0).im, 10.0, epsilon = 1e-12);
    assert_abs_diff_eq!(y.get(0, 1).re, 0.0, epsilon = 1e-12);
}

#[test]
fn admittance_empty_line_set_is_shunt_diagonal() {
    let mut case = cases::two_bus(0.0);
    case.lines.clear();
    case.buses[0].b_shunt = 0.25;
    // An isolated pair is not solvable but is still a legal matrix build.
    let index = case.index();
    let y = super::ybus::build_admittance_indexed(&case, &index, &[]);
    assert_eq!(y.get(0, 0), Complex64::new(0.0, 0.25));
    assert_eq!(y.get(0, 1), Complex64::new(0.0, 0.0));
    assert_eq!(y.get(1, 1), Complex64::new(0.0, 0.0));
}

#[test]
fn admittance_duplicate_line_id_rejected() {
    let mut case = cases::two_bus(0.0);
    let mut dup = case.lines[0].clone();
    dup.reactance = 0.2;
    case.lines.push(dup);
    match build_admittance(&case) {
        Err(GridError::DuplicateLine { id, .. }) => assert_eq!(id, "1-2"),
        other => panic!("expected duplicate-line rejection, got {other:?}"),
    }
}

/// Brute-force oracle: assemble the dense matrix by summing each branch's
/// 2x2 stamp independently of the production builder.
fn dense_admittance_oracle(case: &NetworkCase) -> nalgebra::DMatrix<Complex64> {
    let index = case.index();
    let n = case.buses.len();
    let mut m = nalgebra::DMatrix::<Complex64>::zeros(n, n);
    for l in &case.lines {
        let f = index.bus(l.from).unwrap();
        let t = index.bus(l.to).unwrap();
        let ys = 1.0 / Complex64::new(l.resistance, l.reactance);
        let sh = Complex64::new(0.0, l.charging / 2.0);
        let a = l.tap;
        m[(f, f)] += (ys + sh) / (a * a);
        m[(t, t)] += ys + sh;
        m[(f, t)] -= ys / a;
        m[(t, f)] -= ys / a;
    }
    for (i, b) in case.buses.iter().enumerate() {
        m[(i, i)] += Complex64::new(b.g_shunt, b.b_shunt);
    }
    m
}

#[test]
fn admittance_39_bus_matches_oracle() {
    let case = cases::ieee39();
    let y = build_admittance(&case).unwrap().dense();
    let oracle = dense_admittance_oracle(&case);
    let diff = (&y - &oracle).map(|c| c.norm()).max();
    assert!(diff < 1e-12, "max entry difference {diff}");
    // Symmetry.
    let asym = (&y - &y.transpose()).map(|c| c.norm()).max();
    assert!(asym < 1e-12);
}

#[test]
fn power_flow_no_load_is_flat() {
    let case = cases::two_bus(0.0);
    let sol = solve_power_flow(&case, &OperatingPoint::flat(&case), &PowerFlowConfig::default())
        .unwrap();
    for i in 0..2 {
        assert_abs_diff_eq!(sol.vm[i], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.va[i], 0.0, epsilon = 1e-12);
    }
}

#[test]
fn power_flow_two_bus_closed_form() {
    // Lossless x = 0.1, V = 1 both ends (reactive load zero, slack holds
    // bus 1): P = 10 * V1 * V2 * sin(th12). The load bus voltage dips, so
    // solve the implicit pair with the exact equations as the oracle:
    //   P: 10 * V2 * sin(th) = 1.0, Q: 10 * V2 * (V2 - cos(th)) = 0.
    let case = cases::two_bus(100.0);
    let sol = solve_power_flow(&case, &OperatingPoint::flat(&case), &PowerFlowConfig::default())
        .unwrap();
    let th = sol.va[0] - sol.va[1];
    let v2 = sol.vm[1];
    assert_abs_diff_eq!(10.0 * v2 * th.sin(), 1.0, epsilon = 1e-8);
    assert_abs_diff_eq!(10.0 * v2 * (v2 - th.cos()), 0.0, epsilon = 1e-8);
    // With V2 = cos(th): sin(th)*cos(th) = 0.1 => th = asin(0.2)/2.
    let th_expected = 0.5 * (0.2f64).asin();
    assert_abs_diff_eq!(th, th_expected, epsilon = 1e-8);
    assert_abs_diff_eq!(line_flow(&case, &sol, "1-2").unwrap(), 1.0, epsilon = 1e-8);
}

/// Independent power-flow oracle: complex-vector mismatch S - V (Y V)*.
fn complex_mismatch(case: &NetworkCase, point: &OperatingPoint) -> f64 {
    let index = case.index();
    let y = dense_admittance_oracle(case);
    let n = case.buses.len();
    let v: Vec<Complex64> = (0..n)
        .map(|i| Complex64::from_polar(point.vm[i], point.va[i]))
        .collect();
    let (p, q) = point.bus_injections(case, &index);
    let mut worst = 0.0f64;
    for i in 0..n {
        let mut iy = Complex64::default();
        for j in 0..n {
            iy += y[(i, j)] * v[j];
        }
        let s_calc = v[i] * iy.conj();
        let kind = case.buses[i].kind;
        if kind != BusKind::Slack {
            worst = worst.max((p[i] - s_calc.re).abs());
        }
        if kind == BusKind::Pq {
            worst = worst.max((q[i] - s_calc.im).abs());
        }
    }
    worst
}

#[test]
fn power_flow_39_bus_from_flat_start() {
    let case = cases::ieee39();
    let config = PowerFlowConfig::default();
    let sol = solve_power_flow(&case, &OperatingPoint::flat(&case), &config).unwrap();
    assert!(power_mismatch(&case, &sol) <= 1e-8);
    assert!(complex_mismatch(&case, &sol) <= 1e-6);

    // PV setpoints held (no reactive limit hit in the base case for these).
    let index = case.index();
    for g in &case.generators {
        let i = index.bus(g.bus).unwrap();
        if case.buses[i].kind == BusKind::Pv {
            let q = sol.gen_q[index.gens_at_bus[i][0]];
            if q > g.q_min + 1e-6 && q < g.q_max - 1e-6 {
                assert_abs_diff_eq!(sol.vm[i], g.v_setpoint, epsilon = 1e-9);
            }
        }
    }

    // Line flows match the independent complex branch-equation oracle.
    for (li, l) in case.lines.iter().enumerate() {
        let f = index.bus(l.from).unwrap();
        let t = index.bus(l.to).unwrap();
        let vf = Complex64::from_polar(sol.vm[f], sol.va[f]);
        let vt = Complex64::from_polar(sol.vm[t], sol.va[t]);
        let ys = 1.0 / Complex64::new(l.resistance, l.reactance);
        let sh = Complex64::new(0.0, l.charging / 2.0);
        let a = l.tap;
        let i_from = (ys + sh) / (a * a) * vf - ys / a * vt;
        let s_from = vf * i_from.conj();
        assert_abs_diff_eq!(sol.line_flow[li], s_from.re, epsilon = 1e-6);
    }
}

#[test]
fn power_flow_newton_count_within_budget() {
    // Count Newton iterations by shrinking the cap until failure.
    let case = cases::ieee39();
    let mut config = PowerFlowConfig::default();
    config.max_iterations = 10;
    let flat = OperatingPoint::flat(&case);
    assert!(
        solve_power_flow(&case, &flat, &config).is_ok(),
        "39-bus case should converge from flat start within 10 iterations"
    );
}

#[test]
fn power_flow_energy_balance() {
    let case = cases::ieee39();
    let sol = solve_power_flow(&case, &OperatingPoint::flat(&case), &PowerFlowConfig::default())
        .unwrap();
    let index = case.index();
    let gen: f64 = sol.gen_p.iter().sum::<f64>()
        + sol.wind_p.iter().sum::<f64>()
        + sol.ess_p.iter().sum::<f64>();
    let load: f64 = case.buses.iter().map(|b| b.p_load).sum();
    // Losses summed independently over both branch ends.
    let mut losses = 0.0;
    for (li, _) in case.lines.iter().enumerate() {
        let from = super::flows::line_flow_indexed(&case, &index, &sol.vm, &sol.va, li, true);
        let to = super::flows::line_flow_indexed(&case, &index, &sol.vm, &sol.va, li, false);
        losses += from + to;
    }
    assert_abs_diff_eq!(gen - load, losses, epsilon = 1e-8);
}

#[test]
fn power_flow_divergence_reported() {
    // An absurd load cannot be served through x = 0.1.
    let case = cases::two_bus(5000.0);
    match solve_power_flow(&case, &OperatingPoint::flat(&case), &PowerFlowConfig::default()) {
        Err(GridError::Diverged { mismatch, .. }) => assert!(mismatch.is_finite() || true),
        Err(GridError::SingularJacobian { .. }) => {}
        other => panic!("expected divergence, got {other:?}"),
    }
}

#[test]
fn line_flow_trivial_and_antisymmetric() {
    let case = cases::two_bus(0.0);
    let sol = solve_power_flow(&case, &OperatingPoint::flat(&case), &PowerFlowConfig::default())
        .unwrap();
    assert_abs_diff_eq!(line_flow(&case, &sol, "1-2").unwrap(), 0.0, epsilon = 1e-12);
    assert!(matches!(
        line_flow(&case, &sol, "9-99"),
        Err(GridError::UnknownLine(_))
    ));

    // Lossless line: from-side flow equals the negated to-side flow.
    let loaded = cases::two_bus(100.0);
    let sol = solve_power_flow(&loaded, &OperatingPoint::flat(&loaded), &PowerFlowConfig::default())
        .unwrap();
    let f = directed_line_flow(&loaded, &sol, "1-2", 1).unwrap();
    let t = directed_line_flow(&loaded, &sol, "1-2", 2).unwrap();
    assert_abs_diff_eq!(f, -t, epsilon = 1e-10);
}

#[test]
fn flow_derivatives_lossless_at_zero_angle() {
    let case = cases::two_bus(0.0);
    let sol = solve_power_flow(&case, &OperatingPoint::flat(&case), &PowerFlowConfig::default())
        .unwrap();
    let d = line_flow_derivatives(&case, &sol, "1-2").unwrap();
    // dP/dth_from = (1/x) * V1 * V2 = 10 at flat voltage; dP/dV = 0.
    assert_abs_diff_eq!(d.grad[2], 10.0, epsilon = 1e-12);
    assert_abs_diff_eq!(d.grad[3], -10.0, epsilon = 1e-12);
    assert_abs_diff_eq!(d.grad[0], 0.0, epsilon = 1e-12);
    assert_abs_diff_eq!(d.grad[1], 0.0, epsilon = 1e-12);
}

fn perturbed(base: &OperatingPoint, var: StateVar, h: f64) -> OperatingPoint {
    let mut p = base.clone();
    match var {
        StateVar::Vm(i) => p.vm[i] += h,
        StateVar::Va(i) => p.va[i] += h,
    }
    p
}

#[test]
fn flow_derivatives_match_finite_differences() {
    let case = cases::ieee39();
    let sol = solve_power_flow(&case, &OperatingPoint::flat(&case), &PowerFlowConfig::default())
        .unwrap();
    let mut rng = crate::test_rng(7);
    let h = 1e-6;
    for trial in 0..100 {
        // Random solved-neighborhood state: jitter the solution.
        let mut point = sol.clone();
        for v in point.vm.iter_mut() {
            *v += 0.05 * crate::unit_rand(&mut rng);
        }
        for a in point.va.iter_mut() {
            *a += 0.1 * crate::unit_rand(&mut rng);
        }
        let li = trial % case.lines.len();
        let id = case.lines[li].id.clone();
        let d = line_flow_derivatives(&case, &point, &id).unwrap();
        for (k, &var) in d.vars.iter().enumerate() {
            let up = line_flow(&case, &perturbed(&point, var, h), &id).unwrap();
            let dn = line_flow(&case, &perturbed(&point, var, -h), &id).unwrap();
            let fd = (up - dn) / (2.0 * h);
            let scale = d.grad[k].abs().max(1.0);
            assert!(
                (d.grad[k] - fd).abs() / scale < 1e-6,
                "line {id} grad[{k}]: analytic {} vs fd {fd}",
                d.grad[k]
            );
            // Hessian row k against finite differences of the analytic
            // gradient.
            let gu = line_flow_derivatives(&case, &perturbed(&point, var, h), &id).unwrap();
            let gd = line_flow_derivatives(&case, &perturbed(&point, var, -h), &id).unwrap();
            for m in 0..4 {
                let fd2 = (gu.grad[m] - gd.grad[m]) / (2.0 * h);
                let scale = d.hess[k][m].abs().max(1.0);
                assert!(
                    (d.hess[k][m] - fd2).abs() / scale < 1e-5,
                    "line {id} hess[{k}][{m}]: analytic {} vs fd {fd2}",
                    d.hess[k][m]
                );
            }
        }
        // Exact symmetry.
        for a in 0..4 {
            for b in 0..4 {
                assert_eq!(d.hess[a][b], d.hess[b][a]);
            }
        }
    }
}

#[test]
fn balance_jacobian_matches_finite_differences() {
    let case = cases::ieee39();
    let index = case.index();
    let ybus = super::ybus::build_admittance_indexed(&case, &index, &[]);
    let sol = solve_power_flow(&case, &OperatingPoint::flat(&case), &PowerFlowConfig::default())
        .unwrap();
    let jac = BalanceJacobian::new(&ybus, &sol.vm, &sol.va);
    let h = 1e-6;
    let n = case.buses.len();
    for i in (0..n).step_by(5) {
        for k in 0..n {
            let mut vm_u = sol.vm.clone();
            vm_u[k] += h;
            let mut vm_d = sol.vm.clone();
            vm_d[k] -= h;
            let (pu, qu) = power_injections(&ybus, &vm_u, &sol.va);
            let (pd, qd) = power_injections(&ybus, &vm_d, &sol.va);
            assert_abs_diff_eq!(jac.dp_dvm(i, k), (pu[i] - pd[i]) / (2.0 * h), epsilon = 1e-5);
            assert_abs_diff_eq!(jac.dq_dvm(i, k), (qu[i] - qd[i]) / (2.0 * h), epsilon = 1e-5);

            let mut va_u = sol.va.clone();
            va_u[k] += h;
            let mut va_d = sol.va.clone();
            va_d[k] -= h;
            let (pu, qu) = power_injections(&ybus, &sol.vm, &va_u);
            let (pd, qd) = power_injections(&ybus, &sol.vm, &va_d);
            assert_abs_diff_eq!(jac.dp_dva(i, k), (pu[i] - pd[i]) / (2.0 * h), epsilon = 1e-5);
            assert_abs_diff_eq!(jac.dq_dva(i, k), (qu[i] - qd[i]) / (2.0 * h), epsilon = 1e-5);
        }
    }
}

#[test]
fn weighted_injection_hessian_matches_finite_differences() {
    let case = cases::two_area();
    let index = case.index();
    let ybus = super::ybus::build_admittance_indexed(&case, &index, &[]);
    let n = case.buses.len();
    let vm = vec![1.02, 0.97];
    let va = vec![0.15, -0.05];
    let yp = vec![0.7, -0.3];
    let yq = vec![0.2, 0.9];
    let hess = weighted_injection_hessian(&ybus, &vm, &va, &yp, &yq);

    // Finite differences of the weighted gradient sum_i yp dP_i + yq dQ_i.
    let weighted_grad = |vm: &[f64], va: &[f64]| -> Vec<f64> {
        let jac = BalanceJacobian::new(&ybus, vm, va);
        let mut g = vec![0.0; 2 * n];
        for i in 0..n {
            for k in 0..n {
                g[k] += yp[i] * jac.dp_dvm(i, k) + yq[i] * jac.dq_dvm(i, k);
                g[n + k] += yp[i] * jac.dp_dva(i, k) + yq[i] * jac.dq_dva(i, k);
            }
        }
        g
    };
    let h = 1e-6;
    for slot in 0..2 * n {
        let (mut vm_u, mut va_u) = (vm.clone(), va.clone());
        let (mut vm_d, mut va_d) = (vm.clone(), va.clone());
        if slot < n {
            vm_u[slot] += h;
            vm_d[slot] -= h;
        } else {
            va_u[slot - n] += h;
            va_d[slot - n] -= h;
        }
        let gu = weighted_grad(&vm_u, &va_u);
        let gd = weighted_grad(&vm_d, &va_d);
        for m in 0..2 * n {
            let fd = (gu[m] - gd[m]) / (2.0 * h);
            assert_abs_diff_eq!(hess[(slot, m)], fd, epsilon = 1e-5);
        }
    }
}

#[test]
fn schema_round_trip() {
    let case = cases::ieee39();
    let text = case.to_json();
    let back = NetworkCase::from_json(&text).unwrap();
    assert_eq!(back.buses.len(), case.buses.len());
    assert_eq!(back.lines.len(), case.lines.len());
    assert_abs_diff_eq!(back.buses[2].p_load, case.buses[2].p_load, epsilon = 1e-12);
    assert_eq!(back.tie_lines.len(), 4);
    let sol_a = solve_power_flow(&case, &OperatingPoint::flat(&case), &PowerFlowConfig::default())
        .unwrap();
    let sol_b = solve_power_flow(&back, &OperatingPoint::flat(&back), &PowerFlowConfig::default())
        .unwrap();
    for i in 0..case.buses.len() {
        assert_abs_diff_eq!(sol_a.vm[i], sol_b.vm[i], epsilon = 1e-9);
    }
}

#[test]
fn validation_rejects_bad_cases() {
    let mut case = cases::two_bus(0.0);
    case.buses[1].kind = BusKind::Slack;
    assert!(matches!(case.validate(), Err(GridError::InvalidCase(_))));

    let mut case = cases::two_bus(0.0);
    case.lines[0].to = 77;
    assert!(matches!(case.validate(), Err(GridError::UnknownBus(77))));

    let mut case = cases::two_bus(0.0);
    case.generators[0].inertia = 0.0;
    assert!(case.validate().is_err());
}
