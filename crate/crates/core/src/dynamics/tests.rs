use approx::assert_abs_diff_eq;
use num_complex::Complex64;

use super::*;
use crate::cases;
use crate::grid::{solve_power_flow, OperatingPoint, PowerFlowConfig};

fn solved(case: &crate::grid::NetworkCase) -> OperatingPoint {
    solve_power_flow(case, &OperatingPoint::flat(case), &PowerFlowConfig::default()).unwrap()
}

#[test]
fn coi_angle_basics() {
    assert_abs_diff_eq!(coi_angle(&[0.7, 0.7, 0.7], &[1.0, 2.0, 5.0]).unwrap(), 0.7);
    assert_abs_diff_eq!(coi_angle(&[0.0, 0.4], &[1.0, 3.0]).unwrap(), 0.3);
    assert!(matches!(
        coi_angle(&[], &[]),
        Err(SimulationError::EmptyMachineSet)
    ));
    // Affine invariance: shifting every angle by k shifts the COI by k.
    let base = coi_angle(&[0.1, -0.2, 0.5], &[2.0, 1.0, 4.0]).unwrap();
    let shifted = coi_angle(&[1.1, 0.8, 1.5], &[2.0, 1.0, 4.0]).unwrap();
    assert_abs_diff_eq!(shifted, base + 1.0, epsilon = 1e-12);
}

#[test]
fn stability_check_boundary_is_strict() {
    let traj = Trajectory {
        time: vec![0.0, 1.0],
        machine_ids: vec!["a".into(), "b".into()],
        inertias: vec![1.0, 1.0],
        angles: vec![vec![0.5, -0.5], vec![0.5, -0.5]],
        speeds: vec![vec![0.0, 0.0]; 2],
        coi: vec![0.0, 0.0],
    };
    let verdict = check_stability(&traj, &StabilityCriterion { delta_max: 1.0 });
    assert!(verdict.stable);
    assert_abs_diff_eq!(verdict.worst_excursion, 0.5);
    // Touching the threshold exactly is unstable (strict inequality).
    let at_limit = check_stability(&traj, &StabilityCriterion { delta_max: 0.5 });
    assert!(!at_limit.stable);
    // Monotone in delta_max.
    for k in 1..50 {
        let dm = 0.02 * k as f64;
        let v = check_stability(&traj, &StabilityCriterion { delta_max: dm });
        assert_eq!(v.stable, dm > 0.5);
    }
}

#[test]
fn equilibrium_preserved_without_fault() {
    let case = cases::ieee39();
    let point = solved(&case);
    let mut contingency = ContingencySpec::new(3, 18);
    contingency.clearing_time = 0.0;
    contingency.trip_line = false;
    let traj = simulate(&case, &point, &contingency, &SimulationConfig::default()).unwrap();
    let first = &traj.angles[0];
    for row in &traj.angles {
        for (a, a0) in row.iter().zip(first) {
            assert!((a - a0).abs() < 1e-9, "drift {:.2e}", (a - a0).abs());
        }
    }
    assert!((traj.time.last().unwrap() - 3.0).abs() < 1e-12);
}

/// Equal-area oracle for the bundled SMIB case: critical clearing angle
/// from the area balance (solved by bisection), critical clearing time from
/// the closed-form constant-acceleration fault-on phase.
pub fn smib_equal_area_critical_time(case: &crate::grid::NetworkCase, point: &OperatingPoint) -> f64 {
    let g1 = &case.generators[0];
    let g2 = &case.generators[1];
    // Internal EMFs from the solved terminal state.
    let emf = |bus_pos: usize, g: &crate::grid::Generator, p: f64, q: f64| {
        let v = Complex64::from_polar(point.vm[bus_pos], point.va[bus_pos]);
        let i = (Complex64::new(p, q) / v).conj();
        v + Complex64::new(0.0, g.xd_transient) * i
    };
    let e1 = emf(0, g1, point.gen_p[0], point.gen_q[0]);
    let e2 = emf(1, g2, point.gen_p[1], point.gen_q[1]);
    let p_m = point.gen_p[0];
    let delta0 = e1.arg() - e2.arg();
    // Both parallel lines in service pre-fault; one line after clearing.
    let x_post = g1.xd_transient + case.lines[0].reactance + g2.xd_transient;
    let p_max_post = e1.norm() * e2.norm() / x_post;
    let delta_u = std::f64::consts::PI - (p_m / p_max_post).asin();

    // Accelerating area equals decelerating area at the critical angle.
    let area_balance = |dc: f64| {
        let accel = p_m * (dc - delta0);
        let decel = p_max_post * (dc.cos() - delta_u.cos()) - p_m * (delta_u - dc);
        accel - decel
    };
    let (mut lo, mut hi) = (delta0, delta_u);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if area_balance(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let delta_c = 0.5 * (lo + hi);
    // Fault-on: electrical power is zero, so the rotor accelerates
    // uniformly at p_m / M.
    let m1 = 2.0 * g1.inertia / OMEGA_S;
    (2.0 * m1 * (delta_c - delta0) / p_m).sqrt()
}

fn smib_run(clearing_time: f64) -> (StabilityVerdict, Trajectory) {
    let case = cases::smib(90.0);
    let point = solved(&case);
    let mut contingency = ContingencySpec::new(1, 2);
    contingency.clearing_time = clearing_time;
    // Fault on line L2 (the duplicate parallel path), cleared by tripping it.
    let traj = simulate(&case, &point, &contingency, &SimulationConfig::default()).unwrap();
    (
        check_stability(&traj, &StabilityCriterion::default()),
        traj,
    )
}

#[test]
fn smib_stable_below_critical_clearing() {
    let case = cases::smib(90.0);
    let point = solved(&case);
    let t_crit = smib_equal_area_critical_time(&case, &point);
    assert!(t_crit > 0.05 && t_crit < 1.0, "t_crit = {t_crit}");
    let (verdict, traj) = smib_run(t_crit - 0.06);
    assert!(verdict.stable, "excursion {}", verdict.worst_excursion);
    // Bounded swing: the relative angle comes back down.
    let rel: Vec<f64> = traj
        .angles
        .iter()
        .map(|row| row[0] - row[1])
        .collect();
    let max = rel.iter().cloned().fold(f64::MIN, f64::max);
    assert!(max < std::f64::consts::PI);
    assert!(*rel.last().unwrap() < max);
}

#[test]
fn smib_unstable_above_critical_clearing() {
    let case = cases::smib(90.0);
    let point = solved(&case);
    let t_crit = smib_equal_area_critical_time(&case, &point);
    let (verdict, traj) = smib_run(t_crit + 0.08);
    assert!(!verdict.stable);
    // Monotone divergence of the relative angle after clearing.
    let rel: Vec<f64> = traj.angles.iter().map(|row| row[0] - row[1]).collect();
    let k_clear = traj
        .time
        .iter()
        .position(|&t| t >= t_crit + 0.08)
        .unwrap();
    let tail = &rel[k_clear..];
    assert!(tail.windows(2).all(|w| w[1] >= w[0] - 1e-9));
}

#[test]
fn smib_simulated_critical_time_brackets_equal_area_value() {
    let case = cases::smib(90.0);
    let point = solved(&case);
    let t_eac = smib_equal_area_critical_time(&case, &point);
    // Scan clearing times on the integration grid for the stability flip.
    let dt = 0.05;
    let mut last_stable = None;
    let mut first_unstable = None;
    for k in 1..20 {
        let t = k as f64 * dt;
        let (verdict, _) = smib_run(t);
        if verdict.stable {
            last_stable = Some(t);
        } else {
            first_unstable = Some(t);
            break;
        }
    }
    let lo = last_stable.expect("some clearing time is survivable");
    let hi = first_unstable.expect("some clearing time is fatal");
    assert!(
        t_eac >= lo - dt && t_eac <= hi + dt,
        "equal-area critical time {t_eac:.4} outside simulated bracket [{lo:.2}, {hi:.2}] ± {dt}"
    );
}

#[test]
fn energy_conserved_after_clearing() {
    // Zero damping, lossless network: after the (tripped) fault phase the
    // two-machine system conserves kinetic + potential energy. A short
    // fault keeps the swing in the mild regime the drift bound targets.
    let case = cases::smib(90.0);
    let point = solved(&case);
    let mut contingency = ContingencySpec::new(1, 2);
    contingency.clearing_time = 0.05;
    let traj = simulate(
        &case,
        &point,
        &contingency,
        &SimulationConfig {
            dt: 0.025,
            ..SimulationConfig::default()
        },
    )
    .unwrap();
    let g1 = &case.generators[0];
    let g2 = &case.generators[1];
    let e_mag = |bus: usize, p: f64, q: f64, xd: f64| {
        let v = Complex64::from_polar(point.vm[bus], point.va[bus]);
        let i = (Complex64::new(p, q) / v).conj();
        (v + Complex64::new(0.0, xd) * i).norm()
    };
    let e1 = e_mag(0, point.gen_p[0], point.gen_q[0], g1.xd_transient);
    let e2 = e_mag(1, point.gen_p[1], point.gen_q[1], g2.xd_transient);
    let x_post = g1.xd_transient + case.lines[0].reactance + g2.xd_transient;
    let b12 = e1 * e2 / x_post;
    let (m1, m2) = (2.0 * g1.inertia / OMEGA_S, 2.0 * g2.inertia / OMEGA_S);
    let p_m = [point.gen_p[0], point.gen_p[1]];

    let k_clear = traj.time.iter().position(|&t| t > 0.05).unwrap();
    let energy: Vec<f64> = (k_clear..traj.time.len())
        .map(|k| {
            let d = &traj.angles[k];
            let w = &traj.speeds[k];
            0.5 * m1 * w[0] * w[0] + 0.5 * m2 * w[1] * w[1]
                - p_m[0] * d[0]
                - p_m[1] * d[1]
                - b12 * (d[0] - d[1]).cos()
        })
        .collect();
    let ke_max = (k_clear..traj.time.len())
        .map(|k| {
            let w = &traj.speeds[k];
            0.5 * m1 * w[0] * w[0] + 0.5 * m2 * w[1] * w[1]
        })
        .fold(0.0f64, f64::max);
    let e_min = energy.iter().cloned().fold(f64::MAX, f64::min);
    let e_max = energy.iter().cloned().fold(f64::MIN, f64::max);
    assert!(
        (e_max - e_min) / ke_max <= 0.005,
        "energy drift {:.3e} of kinetic scale {:.3e}",
        e_max - e_min,
        ke_max
    );
}

#[test]
fn halving_step_changes_excursion_little() {
    let case = cases::smib(90.0);
    let point = solved(&case);
    let mut contingency = ContingencySpec::new(1, 2);
    contingency.clearing_time = 0.10;
    let coarse = simulate(&case, &point, &contingency, &SimulationConfig::default()).unwrap();
    let fine = simulate(
        &case,
        &point,
        &contingency,
        &SimulationConfig {
            dt: 0.025,
            ..SimulationConfig::default()
        },
    )
    .unwrap();
    let crit = StabilityCriterion::default();
    let a = check_stability(&coarse, &crit).worst_excursion;
    let b = check_stability(&fine, &crit).worst_excursion;
    assert!((a - b).abs() / b <= 0.01, "coarse {a} vs fine {b}");
}

#[test]
fn trajectory_csv_layout() {
    let (_, traj) = smib_run(0.05);
    let csv = traj.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "time_s,angle_G1_rad,angle_G2_rad,coi_rad");
    assert_eq!(lines.count(), traj.time.len());
}

#[test]
fn unknown_faulted_line_rejected() {
    let case = cases::smib(90.0);
    let point = solved(&case);
    let contingency = ContingencySpec::new(1, 7);
    assert!(matches!(
        simulate(&case, &point, &contingency, &SimulationConfig::default()),
        Err(SimulationError::InvalidContingency(_))
    ));
}
