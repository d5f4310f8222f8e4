use proptest::prelude::*;
use rhythmic_core::grid::{build_grid, GridNetwork, NetworkSpec};
use rhythmic_core::rhythm::*;

fn net(size: usize, block: f64) -> GridNetwork {
    build_grid(size, size, block, 2, 1).unwrap()
}

#[test]
fn balanced_schedule_epochs() {
    let cfg = RhythmConfig::balanced(10.0, 15.0);
    let n = net(2, 150.0);
    let s = build_schedule(&cfg, &n, 30.0).unwrap();
    assert_eq!(s.horizontal(&n), &[0.0, 10.0, 20.0]);
    assert_eq!(s.vertical(&n), &[5.0, 15.0, 25.0]);
}

#[test]
fn offset_schedule_gives_horizontals_the_longer_window() {
    let mut cfg = RhythmConfig::balanced(10.0, 15.0);
    cfg.beta = 0.75;
    cfg.platoon_length = 15.0 * 7.5;
    cfg.platoon_length_vertical = Some(15.0 * 2.5);
    let n = net(4, 150.0);
    let s = build_schedule(&cfg, &n, 30.0).unwrap();
    assert_eq!(s.vertical(&n), &[7.5, 17.5, 27.5]);
    assert!(verify_conflict_free(&cfg, &n, &s, 600.0).is_empty());
    assert!(cfg.crossroads_capacity_for(rhythmic_core::grid::Axis::Horizontal, 2)
        > cfg.crossroads_capacity_for(rhythmic_core::grid::Axis::Vertical, 2));
}

#[test]
fn zero_beta_is_rejected() {
    let mut cfg = RhythmConfig::balanced(10.0, 15.0);
    cfg.beta = 0.0;
    assert!(build_schedule(&cfg, &net(2, 150.0), 30.0).is_err());
}

#[test]
fn block_that_is_not_a_rhythm_multiple_is_rejected() {
    let cfg = RhythmConfig::balanced(20.0 / 3.0, 15.0);
    assert!(build_schedule(&cfg, &net(2, 150.0), 30.0).is_err());
}

#[test]
fn default_six_by_six_configuration_is_conflict_free() {
    let cfg = RhythmConfig::balanced(10.0, 15.0);
    let n = net(6, 150.0);
    let s = build_schedule(&cfg, &n, 1800.0).unwrap();
    assert!(verify_conflict_free(&cfg, &n, &s, 1800.0).is_empty());
    assert!(passages_alternate(&occupancies(&cfg, &n, &s, 1800.0)));
}

#[test]
fn fractional_segment_multiple_collides() {
    // t_c = 10 s = 1.5 t̂
    let cfg = RhythmConfig::balanced(20.0 / 3.0, 15.0);
    let n = net(2, 150.0);
    let s = schedule_unchecked(&cfg, &n, 300.0);
    assert!(!verify_conflict_free(&cfg, &n, &s, 300.0).is_empty());
}

#[test]
fn overlong_platoons_collide() {
    let mut cfg = RhythmConfig::balanced(10.0, 15.0);
    cfg.platoon_length = 0.6 * 10.0 * 15.0;
    let n = net(2, 150.0);
    assert!(cfg.validate(&n).is_err());
    let s = schedule_unchecked(&cfg, &n, 300.0);
    let c = verify_conflict_free(&cfg, &n, &s, 300.0);
    assert!(!c.is_empty());
    assert!(c.iter().all(|c| (c.overlap - 1.0).abs() < 1e-9));
}

#[test]
fn table_five_capacities() {
    assert_eq!(platoon_capacity(10.0, 0.5, 2, 0.5, 2), (20, 16));
    assert_eq!(platoon_capacity(5.0, 0.5, 2, 0.5, 2), (10, 6));
    assert_eq!(platoon_capacity(10.0 / 3.0, 0.5, 2, 0.5, 2), (6, 2));
    let cfg = RhythmConfig::balanced(10.0, 15.0);
    assert_eq!(cfg.crossroads_capacity_for(rhythmic_core::grid::Axis::Horizontal, 2), 16);
    assert_eq!(cfg.segment_capacity_for(rhythmic_core::grid::Axis::Horizontal, 2), 18);
    assert!((valid_zone_share(10.0, 0.5, 2, 2) - 0.8).abs() < 1e-12);
    assert!((valid_zone_share(5.0, 0.5, 2, 2) - 0.6).abs() < 1e-12);
}

#[test]
fn valid_capacity_grows_with_rhythm() {
    let mut prev = 0;
    for k in 1..200 {
        let t = k as f64 * 0.1;
        let (_, v) = platoon_capacity(t, 0.5, 2, 0.5, 2);
        assert!(v >= prev);
        prev = v;
    }
}

#[test]
fn rhythm_chooser_extremes() {
    let n = net(4, 150.0);
    let share = |t: f64| valid_zone_share(t, 0.5, 2, 2);
    let cands = [10.0, 10.0 / 3.0, 5.0];
    assert_eq!(choose_rhythm_length(&cands, &[], &n, 0.9, 7200.0, &share).unwrap(), 10.0 / 3.0);
    let route = n.streets[0].links.clone();
    let huge = [OdRoutes { demand_vph: 1e6, routes: vec![route.clone()] }];
    assert_eq!(choose_rhythm_length(&cands, &huge, &n, 0.9, 7200.0, &share).unwrap(), 10.0);
    // 3000 vph on one street fits t̂ = 5 (γ·C = 3888) but not t̂ = 10/3 (2160).
    let mid = [OdRoutes { demand_vph: 3000.0, routes: vec![route] }];
    assert_eq!(choose_rhythm_length(&cands, &mid, &n, 0.9, 7200.0, &share).unwrap(), 5.0);
}

fn valid_config() -> impl Strategy<Value = (RhythmConfig, NetworkSpec)> {
    (
        prop::sample::select(vec![10.0 / 3.0, 5.0, 10.0]),
        1u32..=3,
        prop::sample::select(vec![0.25, 0.5, 0.75]),
        0.05f64..=1.0,
        0.05f64..=1.0,
        prop::sample::select(vec![2usize, 4, 6, 8]),
        prop::sample::select(vec![2usize, 4, 6, 8]),
        8.0f64..20.0,
    )
        .prop_map(|(t, a, beta, fh, fv, m, n, v)| {
            let mut cfg = RhythmConfig::balanced(t, v);
            cfg.beta = beta;
            cfg.platoon_length = fh * beta * t * v;
            cfg.platoon_length_vertical = Some(fv * (1.0 - beta) * t * v);
            let mut spec = NetworkSpec::homogeneous(m, n, a as f64 * t * v, 2, 1);
            spec.approach_length = Some(t * v * 1.5);
            (cfg, spec)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]
    #[test]
    fn valid_rhythms_never_collide((cfg, spec) in valid_config(), horizon in 60.0f64..3600.0) {
        let n = GridNetwork::from_spec(&spec).unwrap();
        let s = build_schedule(&cfg, &n, horizon).unwrap();
        let w = occupancies(&cfg, &n, &s, horizon);
        prop_assert!(find_conflicts(&w).is_empty());
        prop_assert!(passages_alternate(&w));
    }

    #[test]
    fn fractional_multiples_collide(t in prop::sample::select(vec![10.0 / 3.0, 5.0, 10.0]),
                                    half_steps in prop::sample::select(vec![1u32, 3, 5]),
                                    size in prop::sample::select(vec![2usize, 4, 6, 8])) {
        let cfg = RhythmConfig::balanced(t, 15.0);
        let block = half_steps as f64 * 0.5 * t * 15.0;
        let n = build_grid(size, size, block, 2, 0).unwrap();
        prop_assert!(cfg.validate(&n).is_err());
        let s = schedule_unchecked(&cfg, &n, 600.0);
        prop_assert!(!verify_conflict_free(&cfg, &n, &s, 600.0).is_empty());
    }
}
