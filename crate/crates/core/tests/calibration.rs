mod common;

use common::{config, simulate, OFFSETS};
use find_core::calib::{
    aggregate_profile, apply_profile, estimate_offsets, offsets_from_csi, stability_report,
    CalibError, CalibrationMeasurement, CalibrationProfile,
};
use find_core::stats::wrap_phase;
use proptest::prelude::*;
use std::f64::consts::PI;

fn equidistant(
    seed: u64,
    frames: usize,
    positions: usize,
    paths: usize,
    offsets: &[f64],
) -> CalibrationMeasurement {
    let mut c = config(seed, &[0.0], frames, Some(20.0));
    c.impairments.phase_offsets = Some(offsets.to_vec());
    c.positions.count = positions;
    c.multipath.paths = paths;
    c.environment = if paths > 1 { "classroom" } else { "anechoic" }.into();
    CalibrationMeasurement::from_records(simulate(&c).records)
}

fn max_circ_err(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| wrap_phase(x - y).abs())
        .fold(0.0, f64::max)
}

fn noiseless(seed: u64, offsets: &[f64]) -> CalibrationMeasurement {
    let mut c = config(seed, &[0.0], 2, None);
    c.impairments.phase_offsets = Some(offsets.to_vec());
    CalibrationMeasurement::from_records(simulate(&c).records)
}

/// Per-channel RMS over frames of the circular offset error.
fn rms_per_channel(estimates: &[Vec<f64>], truth: &[f64]) -> Vec<f64> {
    (0..truth.len())
        .map(|m| {
            let ss: f64 = estimates
                .iter()
                .map(|e| wrap_phase(e[m] - truth[m]).powi(2))
                .sum();
            (ss / estimates.len() as f64).sqrt()
        })
        .collect()
}

#[test]
fn noiseless_offsets_are_exact() {
    for phi in [OFFSETS, [0.0, 3.1, -3.1, 0.05]] {
        for r in noiseless(1, &phi).records() {
            let off = estimate_offsets(r).unwrap();
            assert_eq!(off[0], 0.0);
            assert!(max_circ_err(&off, &phi) < 1e-6, "{off:?}");
            assert!(off.iter().all(|o| *o > -PI && *o <= PI));
        }
    }
}

// One VHT-LTF symbol at 20 dB gives a per-frame std near 6e-3 rad, so the
// 1e-2 budget is checked as an RMS over frames.
#[test]
fn per_frame_offsets_at_20_db() {
    let m = equidistant(1, 40, 1, 1, &OFFSETS);
    let est: Vec<Vec<f64>> = m.records().map(|r| estimate_offsets(r).unwrap()).collect();
    assert!(est.iter().all(|e| e[0] == 0.0));
    let rms = rms_per_channel(&est, &OFFSETS);
    assert!(rms.iter().all(|e| *e < 1e-2), "{rms:?}");
}

#[test]
fn wraparound_offsets_recovered() {
    let phi = [0.0, 3.1, -3.1, 0.05];
    let m = equidistant(2, 40, 1, 1, &phi);
    let est: Vec<Vec<f64>> = m.records().map(|r| estimate_offsets(r).unwrap()).collect();
    // a 2π slip would show up as an error near 2π
    assert!(est
        .iter()
        .all(|e| max_circ_err(e, &phi) < 0.1 && e.iter().all(|o| *o > -PI && *o <= PI)));
    assert!(rms_per_channel(&est, &phi).iter().all(|e| *e < 1e-2));
    let p = aggregate_profile(&m, "anechoic").unwrap();
    assert!(max_circ_err(&p.offsets, &phi) < 3e-3);
}

#[test]
fn single_frame_profile_is_that_frame() {
    let m = equidistant(3, 1, 1, 1, &OFFSETS);
    let p = aggregate_profile(&m, "x").unwrap();
    let off = estimate_offsets(m.records().next().unwrap()).unwrap();
    assert_eq!(p.n_frames_used, 1);
    for (a, b) in p.offsets.iter().zip(&off) {
        assert!((a - b).abs() < 1e-15);
    }
}

#[test]
fn profile_from_100_frames() {
    let m = equidistant(4, 25, 4, 1, &OFFSETS);
    let p = aggregate_profile(&m, "anechoic").unwrap();
    assert_eq!(p.n_frames_used, 100);
    assert!(max_circ_err(&p.offsets, &OFFSETS) < 3e-3, "{:?}", p.offsets);
    assert!(
        p.circular_std.iter().all(|s| *s >= 0.0 && *s < 2e-2),
        "{:?}",
        p.circular_std
    );
    assert_eq!(p.environment_label, "anechoic");
}

#[test]
fn empty_measurement_rejected() {
    let m = CalibrationMeasurement::default();
    assert_eq!(aggregate_profile(&m, "x"), Err(CalibError::Empty));
    assert!(matches!(
        stability_report(&m, "x"),
        Err(CalibError::InsufficientPositions(0))
    ));
}

#[test]
fn mean_of_opposite_near_pi_phases_is_pi() {
    let mean = find_core::stats::circular_mean(&[PI - 0.1, -(PI - 0.1)]).unwrap();
    assert!((mean.abs() - PI).abs() < 1e-12, "{mean}");
}

#[test]
fn apply_then_estimate_leaves_no_offset() {
    let p = aggregate_profile(&equidistant(5, 40, 1, 1, &OFFSETS), "a").unwrap();
    let fresh = equidistant(6, 40, 1, 1, &OFFSETS);
    let resid: Vec<Vec<f64>> = fresh
        .records()
        .map(|r| offsets_from_csi(&apply_profile(&r.csi_matrix(), &p).unwrap()).unwrap())
        .collect();
    assert!(rms_per_channel(&resid, &[0.0; 4]).iter().all(|e| *e < 1e-2));

    // noiseless: exact inverse, and a second application doubles the rotation
    let exact = CalibrationProfile::from_offsets(OFFSETS.to_vec(), "exact");
    for r in noiseless(7, &OFFSETS).records() {
        let fixed = apply_profile(&r.csi_matrix(), &exact).unwrap();
        assert!(offsets_from_csi(&fixed)
            .unwrap()
            .iter()
            .all(|o| o.abs() < 1e-6));
        let twice = apply_profile(&fixed, &exact).unwrap();
        assert!(max_circ_err(&offsets_from_csi(&twice).unwrap(), &OFFSETS.map(|o| -o)) < 1e-6);
    }
}

#[test]
fn anechoic_stable_multipath_not() {
    let anechoic = stability_report(&equidistant(7, 10, 5, 1, &OFFSETS), "anechoic").unwrap();
    let classroom = stability_report(&equidistant(7, 10, 5, 5, &OFFSETS), "classroom").unwrap();
    assert_eq!(anechoic.positions.len(), 5);
    let a = anechoic.worst_channel_std();
    assert!(a < 0.05, "{a}");
    for m in 1..4 {
        assert!(
            classroom.cross_position_std[m] > 5.0 * anechoic.cross_position_std[m],
            "channel {m}: {} vs {}",
            classroom.cross_position_std[m],
            anechoic.cross_position_std[m]
        );
    }
    let csv = anechoic.to_csv();
    assert_eq!(csv.lines().count(), 1 + 5 * 4 + 4);
    assert!(csv.starts_with("environment,position,n_frames,channel,offset_rad,circular_std_rad\n"));
}

#[test]
fn identical_positions_have_zero_spread() {
    let one = equidistant(8, 3, 1, 1, &OFFSETS);
    let mut recs: Vec<_> = one.records().cloned().collect();
    let copy: Vec<_> = recs
        .iter()
        .cloned()
        .map(|mut r| {
            r.position_label = "other".into();
            r
        })
        .collect();
    recs.extend(copy);
    let report = stability_report(&CalibrationMeasurement::from_records(recs), "x").unwrap();
    assert!(
        report.cross_position_std.iter().all(|s| s.abs() < 1e-7),
        "{:?}",
        report.cross_position_std
    );
    assert!(matches!(
        stability_report(&one, "x"),
        Err(CalibError::InsufficientPositions(1))
    ));
}

#[test]
fn profile_text_survives_a_file() {
    let p = aggregate_profile(&equidistant(9, 4, 1, 1, &OFFSETS), "anechoic").unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.txt");
    std::fs::write(&path, p.to_text()).unwrap();
    assert_eq!(
        CalibrationProfile::parse(&std::fs::read_to_string(&path).unwrap()).unwrap(),
        p
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn circular_mean_ignores_2pi_shifts(
        phases in proptest::collection::vec(-1.0f64..1.0, 1..20),
        centre in -PI..PI,
        shifts in proptest::collection::vec(-3i32..=3, 20),
    ) {
        let base: Vec<f64> = phases.iter().map(|p| wrap_phase(centre + p)).collect();
        let shifted: Vec<f64> = base.iter().zip(&shifts).map(|(p, k)| p + 2.0 * PI * *k as f64).collect();
        let a = find_core::stats::circular_mean(&base).unwrap();
        let b = find_core::stats::circular_mean(&shifted).unwrap();
        prop_assert!(wrap_phase(a - b).abs() < 1e-9);
        let sa = find_core::stats::circular_std(&base).unwrap();
        let sb = find_core::stats::circular_std(&shifted).unwrap();
        prop_assert!((sa - sb).abs() < 1e-6);
    }
}
