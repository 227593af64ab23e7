use detuned_cnot::equivclass::cnot_distance;
use detuned_cnot::optimize::{
    calibrate_single_step, sweep, write_calibration_csv, CALIBRATION_CSV_HEADER,
};
use detuned_cnot::sequences::GateKind;

#[test]
fn repeated_calibration_is_bitwise_identical() {
    let a = calibrate_single_step(1.3).unwrap();
    let b = calibrate_single_step(1.3).unwrap();
    assert_eq!(a.t_units.to_bits(), b.t_units.to_bits());
    assert_eq!(a.omega1_over_g.to_bits(), b.omega1_over_g.to_bits());
    assert_eq!(a.distance.to_bits(), b.distance.to_bits());
    assert_eq!(a, b);
}

#[test]
fn detuning_sign_does_not_matter() {
    for d in [0.4, 1.0, 1.7] {
        let plus = calibrate_single_step(d).unwrap();
        let minus = calibrate_single_step(-d).unwrap();
        assert!((plus.distance - minus.distance).abs() < 1e-9);
        assert!((plus.invariants.g1 - minus.invariants.g1).norm() < 1e-9);
        assert!((plus.invariants.g2 - minus.invariants.g2).abs() < 1e-9);
    }
}

#[test]
fn distance_matches_invariants() {
    for d in [0.0, 0.8, 1.6] {
        let r = calibrate_single_step(d).unwrap();
        assert!((r.distance - cnot_distance(&r.invariants)).abs() < 1e-12);
    }
}

#[test]
fn two_step_sweep_flags_out_of_range_rows() {
    let rows = sweep(&[0.5, 2.5, 1.9], GateKind::TwoStep);
    assert_eq!(rows.len(), 3);
    assert!((rows[0].outcome.as_ref().unwrap().t_units - 1.0088).abs() < 1e-4);
    assert!(rows[1].outcome.is_err());
    assert!((rows[2].outcome.as_ref().unwrap().t_units - 1.2445).abs() < 1e-4);

    let ok: Vec<_> = rows.into_iter().filter_map(|r| r.outcome.ok()).collect();
    let mut buf = Vec::new();
    write_calibration_csv(&ok, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        CALIBRATION_CSV_HEADER.join(",")
    );
    assert_eq!(text.lines().count(), 3);
}
