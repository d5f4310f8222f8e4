use proptest::prelude::*;
use rhythmic_core::grid::*;
use rhythmic_core::rhythm::*;
use rhythmic_core::speed_curve::*;

fn kin() -> Kinematics {
    Kinematics::new(15.0, 2.5, 3.0, 12.0)
}

fn spec(segments: Vec<f64>, v0: f64, rhythm: f64) -> SpeedCurveSpec {
    SpeedCurveSpec { kinematics: kin(), segments, v0, rhythm }
}

/// Direct evaluation of the envelope definition.
fn v_formula(k: &Kinematics, v_prev: f64, theta: f64, t: f64, duration: f64) -> f64 {
    if theta <= v_prev {
        (v_prev - k.decel * t).max(theta).max(k.accel * t + k.v_min_cross - k.accel * duration)
    } else {
        (k.accel * t + v_prev).min(theta)
    }
}

fn quadrature(f: impl Fn(f64) -> f64, duration: f64) -> f64 {
    // Composite Simpson on a fine grid; the integrand is piecewise linear.
    let n = 200_000;
    let h = duration / n as f64;
    let mut s = f(0.0) + f(duration);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
    }
    s * h / 3.0
}

fn check_invariants(k: &Kinematics, curve: &SpeedCurve, lengths: &[f64]) {
    let mut elapsed = 0.0;
    for (seg, &l) in curve.segments.iter().zip(lengths) {
        let steps = seg.multiple as f64;
        assert_eq!(seg.duration, steps * curve.rhythm);
        assert!((seg.start - elapsed).abs() < 1e-9);
        elapsed += seg.duration;
        let q = quadrature(|t| v_formula(k, seg.v_in, seg.theta, t, seg.duration), seg.duration);
        assert!((q - l).abs() < 1e-6, "distance {q} vs {l}");
        assert!(seg.v_out >= k.v_min_cross - 1e-9);
        let n = (seg.duration * 1000.0).round() as usize;
        let mut prev = seg.speed_at(0.0);
        assert!((prev - seg.v_in).abs() < 1e-9);
        for i in 1..=n {
            let v = seg.speed_at(i as f64 * 1e-3);
            assert!((-1e-9..=k.v_max + 1e-9).contains(&v));
            let dv = (v - prev) / 1e-3;
            assert!(dv <= k.accel + 1e-6 && dv >= -k.decel - 1e-6, "slope {dv}");
            prev = v;
        }
    }
}

#[test]
fn existence_thresholds() {
    let k = kin();
    assert!((k.min_rhythm() - 9.8).abs() < 1e-12);
    assert!((k.min_length() - 66.3).abs() < 1e-12);
    assert!(!feasibility_check(&spec(vec![150.0], 15.0, 9.7)).rhythm_ok);
    let f = feasibility_check(&spec(vec![66.3, 66.2], 15.0, 9.8));
    assert!(f.rhythm_ok);
    assert_eq!(f.segments_ok, vec![true, false]);
    assert!(!f.all());
}

#[test]
fn integer_travel_times() {
    let k = kin();
    assert_eq!(l_max(&k, 15.0, 1, 10.0), 150.0);
    assert_eq!(min_integer_travel(&k, 15.0, 150.0, 10.0).unwrap(), 1);
    assert_eq!(min_integer_travel(&k, 15.0, 151.0, 10.0).unwrap(), 2);
    // From 12 m/s: 1.2 s ramp covers 16.2 m, then 8.8 s at 15 m/s adds 132 m.
    assert!((l_max(&k, 12.0, 1, 10.0) - 148.2).abs() < 1e-9);
    assert_eq!(min_integer_travel(&k, 12.0, 150.0, 10.0).unwrap(), 2);
    // Short horizon stays on the acceleration branch.
    assert!((l_max(&k, 12.0, 1, 1.0) - 13.25).abs() < 1e-12);
}

#[test]
fn cruise_segment_keeps_constant_speed() {
    let seg = construct_segment(&kin(), 15.0, 150.0, 1, 10.0).unwrap();
    assert_eq!(seg.theta, 15.0);
    assert!(seg.knots.iter().all(|&(_, v)| v == 15.0));
    assert_eq!(seg.v_out, 15.0);
}

#[test]
fn lower_envelope_brakes_then_accelerates() {
    let k = kin();
    let d0 = profile_distance(&k, 15.0, 0.0, 20.0);
    assert!((d0 - (225.0 / 6.0 + 144.0 / 5.0)).abs() < 1e-9);
    let seg = construct_segment(&k, 15.0, d0, 2, 10.0).unwrap();
    assert_eq!(seg.theta, 0.0);
    let vmin = seg.knots.iter().map(|&(_, v)| v).fold(f64::INFINITY, f64::min);
    assert_eq!(vmin, 0.0);
    assert!((seg.v_out - 12.0).abs() < 1e-9);
}

#[test]
fn unbracketed_segment_is_reported() {
    assert!(construct_segment(&kin(), 15.0, 10.0, 2, 10.0).is_err());
    assert!(construct_segment(&kin(), 15.0, 400.0, 1, 10.0).is_err());
    assert!(generate(&spec(vec![150.0], 11.0, 10.0)).is_err());
}

#[test]
fn heterogeneous_blocks_meet_every_invariant() {
    let k = kin();
    let lengths = vec![150.0, 200.0, 120.0];
    let curve = generate(&spec(lengths.clone(), 15.0, 10.0)).unwrap();
    assert!(curve.segments.iter().all(|s| s.multiple == 1 || s.multiple == 2));
    check_invariants(&k, &curve, &lengths);
    let table = curve.sample(0.5);
    assert_eq!(table.first().unwrap().0, 0.0);
    assert_eq!(table.last().unwrap().0, curve.duration());
}

#[test]
fn distance_is_lipschitz_in_theta() {
    let k = kin();
    for &(v_prev, a) in &[(15.0, 1u32), (12.0, 2), (13.5, 2), (15.0, 3)] {
        let dur = a as f64 * 10.0;
        let grid: Vec<f64> = (0..=1500).map(|i| i as f64 * 0.01).collect();
        for w in grid.windows(2) {
            let dd = (profile_distance(&k, v_prev, w[1], dur) - profile_distance(&k, v_prev, w[0], dur)).abs();
            assert!(dd <= dur * (w[1] - w[0]) + 1e-9);
        }
        let top = profile_distance(&k, v_prev, 15.0, dur);
        assert!((top - l_max(&k, v_prev, a, 10.0)).abs() < 1e-9);
    }
}

#[test]
fn chained_schedule_on_heterogeneous_grid_is_conflict_free() {
    let spec = NetworkSpec {
        m: 4,
        n: 4,
        block_lengths_h: vec![150.0, 200.0, 120.0],
        block_lengths_v: vec![150.0, 200.0, 120.0],
        approach_length: None,
        lanes: 2,
        junctions_per_segment: 0,
    };
    let net = GridNetwork::from_spec(&spec).unwrap();
    let cfg = RhythmConfig::balanced(10.0, 15.0);
    let curves = street_curves(&net, &kin(), 15.0, 10.0).unwrap();
    for (s, c) in curves.iter().enumerate() {
        check_invariants(&kin(), c, &street_segments(&net, s));
    }
    let sched = schedule_unchecked(&cfg, &net, 600.0);
    let occ = curve_occupancies(&cfg, &net, &sched, &curves, 600.0);
    assert!(!occ.is_empty());
    assert!(find_conflicts(&occ).is_empty());
    assert!(passages_alternate(&occ));
    // Constant-speed platoons on the same grid do collide.
    assert!(!verify_conflict_free(&cfg, &net, &sched, 600.0).is_empty());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn random_streets_meet_every_invariant(
        lengths in prop::collection::vec(66.3f64..400.0, 1..5),
        v0 in 12.0f64..=15.0,
        rhythm in 9.8f64..15.0,
    ) {
        let k = kin();
        let curve = generate(&spec(lengths.clone(), v0, rhythm)).unwrap();
        prop_assert_eq!(curve.segments.len(), lengths.len());
        check_invariants(&k, &curve, &lengths);
        let a: Vec<u32> = curve.segments.iter().map(|s| s.multiple).collect();
        for (s, &m) in curve.segments.iter().zip(&a) {
            prop_assert_eq!(m, min_integer_travel(&k, s.v_in, s.length, rhythm).unwrap());
        }
    }
}
