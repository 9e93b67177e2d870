use approx::assert_abs_diff_eq;

use super::*;
use crate::cases;

#[test]
fn weyl_direct_values() {
    // frac(e * 1) and frac(e * 2).
    assert_abs_diff_eq!(weyl_sequence(std::f64::consts::E, 1), 0.7182818284590452, epsilon = 1e-15);
    assert_abs_diff_eq!(weyl_sequence(std::f64::consts::E, 2), 0.43656365691809046, epsilon = 1e-15);
    // Integer multipliers land on the lattice.
    for n in 1..50 {
        assert_eq!(weyl_sequence(3.0, n), 0.0);
    }
}

#[test]
fn weyl_stream_matches_direct_evaluation() {
    let mut s = WeylStream::e_power(1);
    for n in 1..2000u64 {
        let direct = weyl_sequence(std::f64::consts::E, n);
        let streamed = s.next_value();
        assert!(
            (direct - streamed).abs() < 1e-11,
            "n = {n}: {direct} vs {streamed}"
        );
    }
}

#[test]
fn frac_e_pow_agrees_with_double_double_for_small_exponents() {
    for j in 1..20 {
        let exact = frac_e_pow(j);
        let dd = DoubleDouble::e_pow(j).fract();
        assert!(
            (exact.to_f64() - dd.to_f64()).abs() < 1e-13,
            "j = {j}: {} vs {}",
            exact.to_f64(),
            dd.to_f64()
        );
    }
}

#[test]
fn high_dimension_multipliers_stay_equidistributed() {
    // Far beyond f64 range for e^j; the sequence must still sweep [0, 1).
    for j in [100u32, 112, 150] {
        let mut s = WeylStream::e_power(j);
        let vals: Vec<f64> = (0..200).map(|_| s.next_value()).collect();
        assert!(vals.iter().all(|v| (0.0..1.0).contains(v)));
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        assert!((mean - 0.5).abs() < 0.12, "j = {j}: mean {mean}");
        let mut sorted = vals.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        sorted.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        assert!(sorted.len() > 190, "j = {j}: values collapsed");
    }
}

/// Exact one-dimensional star discrepancy of a point set.
fn star_discrepancy(points: &mut [f64]) -> f64 {
    points.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = points.len() as f64;
    points
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let a = ((i + 1) as f64 / n - x).abs();
            let b = (x - i as f64 / n).abs();
            a.max(b)
        })
        .fold(0.0, f64::max)
}

#[test]
fn weyl_discrepancy_beats_pseudo_random() {
    let mut s = WeylStream::e_power(1);
    let mut weyl: Vec<f64> = (0..1000).map(|_| s.next_value()).collect();
    let mut rng = crate::test_rng(42);
    let mut random: Vec<f64> = (0..1000)
        .map(|_| (crate::unit_rand(&mut rng) + 1.0) / 2.0)
        .collect();
    let dw = star_discrepancy(&mut weyl);
    let dr = star_discrepancy(&mut random);
    assert!(dw < dr, "weyl {dw} vs random {dr}");
}

#[test]
fn samples_respect_bounds_and_first_value() {
    let config = SamplingConfig {
        n_samples: 64,
        expansion: 1.2,
        control_min: vec![0.0, 2.0, 5.0],
        control_max: vec![1.0, 4.0, 5.0],
        load_mean: vec![1.0],
        load_dev: vec![0.25],
    };
    let samples = sample_conditions(&config).unwrap();
    assert_eq!(samples.len(), 64);
    // First control dimension with bounds [0, 1] is frac(e) itself.
    assert_abs_diff_eq!(samples[0].controls[0], 0.7182818284590452, epsilon = 1e-12);
    for s in &samples {
        for (j, &c) in s.controls.iter().enumerate() {
            assert!(c >= config.control_min[j] - 1e-12 && c <= config.control_max[j] + 1e-12);
        }
        // Degenerate bound produces a constant column.
        assert_eq!(s.controls[2], 5.0);
        // Loads stay inside the expanded symmetric band.
        assert!(s.loads[0] >= 1.0 - 1.2 * 0.25 - 1e-12);
        assert!(s.loads[0] <= 1.0 + 1.2 * 0.25 + 1e-12);
    }
    assert!(matches!(
        sample_conditions(&SamplingConfig {
            expansion: 0.9,
            ..config.clone()
        }),
        Err(DatasetError::InvalidConfig(_))
    ));
}

#[test]
fn feature_dimension_formula() {
    let case = cases::ieee39();
    let layout = FeatureLayout::new(&case);
    let expected = 2 * (10 + 1 + 1) + 10 + 3 * 39;
    assert_eq!(layout.dimension(), expected);
    assert_eq!(feature_names(&case).len(), expected);
    let point = crate::grid::solve_power_flow(
        &case,
        &crate::grid::OperatingPoint::flat(&case),
        &crate::grid::PowerFlowConfig::default(),
    )
    .unwrap();
    let u = extract_features(&case, &point);
    assert_eq!(u.len(), expected);
    // Determinism.
    assert_eq!(u, extract_features(&case, &point));
}

#[test]
fn feature_order_keyed_by_id_not_file_order() {
    let case = cases::ieee39();
    let point = crate::grid::solve_power_flow(
        &case,
        &crate::grid::OperatingPoint::flat(&case),
        &crate::grid::PowerFlowConfig::default(),
    )
    .unwrap();
    let u_ref = extract_features(&case, &point);

    // Round-trip through JSON with shuffled arrays: the loader re-sorts,
    // so the same physical system yields the same vector.
    let mut text: serde_json::Value = serde_json::from_str(&case.to_json()).unwrap();
    for key in ["buses", "generators", "lines"] {
        let arr = text[key].as_array_mut().unwrap();
        arr.reverse();
    }
    let shuffled = crate::grid::NetworkCase::from_json(&text.to_string()).unwrap();
    let point2 = crate::grid::solve_power_flow(
        &shuffled,
        &crate::grid::OperatingPoint::flat(&shuffled),
        &crate::grid::PowerFlowConfig::default(),
    )
    .unwrap();
    let u_shuffled = extract_features(&shuffled, &point2);
    for (a, b) in u_ref.iter().zip(&u_shuffled) {
        assert_abs_diff_eq!(a, b, epsilon = 1e-9);
    }
}

fn small_ttc_config() -> TtcSearchConfig {
    TtcSearchConfig {
        lambda_cap: 0.5,
        ..TtcSearchConfig::default()
    }
}

#[test]
fn build_dataset_split_and_determinism() {
    let case = cases::two_area();
    let mut sampling = SamplingConfig::for_case(&case, 1.0, 0.15);
    sampling.n_samples = 40;
    let a = build_dataset(&case, &sampling, &small_ttc_config(), 0.85).unwrap();
    let b = build_dataset(&case, &sampling, &small_ttc_config(), 0.85).unwrap();
    assert_eq!(a.n_samples(), b.n_samples());
    assert_eq!(a.features, b.features);
    assert_eq!(a.targets, b.targets);
    // 85/15 split arithmetic.
    assert_eq!(a.n_train, ((a.n_samples() as f64) * 0.85).round() as usize);
    assert_eq!(a.n_test(), a.n_samples() - a.n_train);
    assert_eq!(a.targets.ncols(), 2);

    // Normalized training columns: zero mean, unit spread.
    for c in 0..a.features.ncols() {
        let vals: Vec<f64> = (0..a.n_train)
            .map(|r| (a.features[(r, c)] - a.norm.u_mean[c]) / a.norm.u_std[c])
            .collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        assert!(mean.abs() < 1e-10, "column {c} mean {mean}");
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64;
        if a.norm.u_std[c] != 1.0 {
            assert!((var.sqrt() - 1.0).abs() < 1e-10, "column {c} std {}", var.sqrt());
        }
    }
}

#[test]
fn labels_reproducible_from_features() {
    // Re-solving a sampled condition reproduces the stored label within
    // the bisection tolerance.
    let case = cases::two_area();
    let mut sampling = SamplingConfig::for_case(&case, 1.0, 0.1);
    sampling.n_samples = 6;
    let config = small_ttc_config();
    let ds = build_dataset(&case, &sampling, &config, 0.85).unwrap();
    let conditions = sample_conditions(&sampling).unwrap();
    let mut checked = 0;
    for condition in &conditions {
        let (scaled, guess) = apply_condition(&case, condition);
        let Ok(point) =
            crate::grid::solve_power_flow(&scaled, &guess, &crate::grid::PowerFlowConfig::default())
        else {
            continue;
        };
        let Ok(ttc) = compute_ttc(&scaled, &point, &scaled.tie_lines, &config) else {
            continue;
        };
        let row = checked;
        for (k, (_, flow)) in ttc.tie_flows.iter().enumerate() {
            assert_abs_diff_eq!(ds.targets[(row, k)], *flow, epsilon = 1e-9);
        }
        checked += 1;
    }
    assert_eq!(checked, ds.n_samples());
}

#[test]
fn empty_request_rejected() {
    let case = cases::two_area();
    let mut sampling = SamplingConfig::for_case(&case, 1.0, 0.1);
    sampling.n_samples = 0;
    assert!(matches!(
        build_dataset(&case, &sampling, &small_ttc_config(), 0.85),
        Err(DatasetError::Empty)
    ));
}

#[test]
fn dataset_files_round_trip() {
    let case = cases::two_area();
    let mut sampling = SamplingConfig::for_case(&case, 1.0, 0.1);
    sampling.n_samples = 10;
    let ds = build_dataset(&case, &sampling, &small_ttc_config(), 0.8).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let stem = dir.path().join("trial");
    save_dataset(&ds, &stem, Some(&sampling)).unwrap();
    let back = load_dataset(&stem).unwrap();
    assert_eq!(back.features, ds.features);
    assert_eq!(back.targets, ds.targets);
    assert_eq!(back.n_train, ds.n_train);
    assert_eq!(back.norm, ds.norm);
    assert_eq!(back.case_hash, ds.case_hash);

    // Saving twice produces identical bytes.
    let stem2 = dir.path().join("again");
    save_dataset(&ds, &stem2, Some(&sampling)).unwrap();
    let a = std::fs::read(stem.with_extension("csv")).unwrap();
    let b = std::fs::read(stem2.with_extension("csv")).unwrap();
    assert_eq!(a, b);
}
