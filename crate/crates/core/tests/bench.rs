use proptest::prelude::*;
use rhythmic_core::bench::*;
use rhythmic_core::demand::*;
use rhythmic_core::grid::*;
use rhythmic_core::rhythm::RhythmConfig;
use rhythmic_core::routing::RouterKind;
use rhythmic_core::sim::{run, NoClock, SimConfig};

fn net6() -> GridNetwork {
    build_grid(6, 6, 150.0, 2, 1).unwrap()
}

fn mq(waiting: u32, downstream: u32) -> MovementQueue {
    MovementQueue { from: 0, to: 1, waiting, downstream }
}

fn cfg(controller: Controller, horizon: f64) -> BenchConfig {
    BenchConfig { controller, horizon, drain: 600.0, seed: 5, ..BenchConfig::default() }
}

#[test]
fn phase_with_larger_pressure_wins() {
    assert_eq!(mp_phase_select(&[vec![mq(3, 0)], vec![mq(5, 0)]]), 1);
    // Downstream queues subtract: 6 − 4 < 3 − 0.
    assert_eq!(mp_phase_select(&[vec![mq(6, 4)], vec![mq(3, 0)]]), 1);
    // Pressures add over movements: 2 + 2 > 3.
    assert_eq!(mp_phase_select(&[vec![mq(2, 0), mq(2, 0)], vec![mq(3, 0)]]), 0);
    assert_eq!(mp_phase_select(&[vec![mq(2, 1)], vec![mq(1, 0)]]), 0);
    assert_eq!(mp_phase_select(&[vec![], vec![]]), 0);
    assert_eq!(mp_phase_select(&[vec![mq(0, 2)], vec![]]), 1);
}

#[test]
fn perpendicular_requests_are_separated_by_occupancy() {
    let t = fcfs_reserve(&[(10.0, Axis::Horizontal), (10.0, Axis::Vertical)], 0.25, 1.0);
    assert_eq!(t, vec![10.0, 11.0]);
    let t = fcfs_reserve(&[(10.0, Axis::Horizontal), (10.0, Axis::Horizontal)], 0.25, 1.0);
    assert_eq!(t, vec![10.0, 10.25]);
    let t = fcfs_reserve(&[(10.0, Axis::Horizontal), (12.0, Axis::Vertical)], 0.25, 1.0);
    assert_eq!(t, vec![10.0, 12.0]);
    assert_eq!(fcfs_reserve(&[(3.0, Axis::Vertical)], 0.25, 1.0), vec![3.0]);
}

#[test]
fn adaptive_route_follows_shortest_times_and_avoids_cost() {
    let net = build_grid(4, 4, 150.0, 2, 0).unwrap();
    let sp = ShortestPaths::new(&net);
    let v = 15.0;
    let mut cost: Vec<f64> = net.links.iter().map(|l| l.length / v).collect();
    for &o in &net.entrances() {
        for &d in &net.exits() {
            let t = time_to(&net, &cost, v, d);
            assert!((t[o] - sp.distance(o, d) / v).abs() < 1e-9);
        }
    }
    // Find a crossroads with two options that both reach some exit.
    let mut checked = 0;
    for &x in net.crossroads_ids() {
        for &d in &net.exits() {
            let outs: Vec<LinkId> = (0..net.links.len()).filter(|&l| net.links[l].from == x).collect();
            let free = time_to(&net, &cost, v, d);
            let reach: Vec<f64> = outs.iter().map(|&l| cost[l] + free[net.links[l].to]).collect();
            if outs.len() != 2 || !reach.iter().all(|r| r.is_finite()) {
                continue;
            }
            let pick = adaptive_route(&net, x, &cost, &free, v, d).unwrap();
            let best = if reach[0] <= reach[1] { outs[0] } else { outs[1] };
            assert_eq!(pick, best);
            // A queue on the better link longer than the detour moves traffic.
            let other = if pick == outs[0] { outs[1] } else { outs[0] };
            let gap = (reach[0] - reach[1]).abs();
            let saved = cost[pick];
            cost[pick] += gap + 1.0;
            let t = time_to(&net, &cost, v, d);
            // Skip detours that come back through the congested link.
            if (t[net.links[other].to] - free[net.links[other].to]).abs() < 1e-9 {
                assert_eq!(adaptive_route(&net, x, &cost, &t, v, d).unwrap(), other);
                checked += 1;
            }
            cost[pick] = saved;
        }
    }
    assert!(checked > 0);
}

#[test]
fn lone_vehicles_cross_fcfs_without_delay() {
    let net = net6();
    let scn = DemandScenario::preset(2, 60.0).unwrap();
    let out = run_benchmark(&net, &scn, &cfg(Controller::FcfsR, 1800.0)).unwrap();
    assert!(out.report.generated > 5);
    for r in &out.records {
        assert!(r.delay < 1.0 + 1e-9, "delay {}", r.delay);
        assert!((r.length - r.shortest).abs() < 1e-9);
    }
}

#[test]
fn signals_delay_by_at_most_a_slot_per_crossing_when_light() {
    let net = net6();
    let scn = DemandScenario::preset(2, 60.0).unwrap();
    for c in [Controller::Mp1, Controller::MpR] {
        let out = run_benchmark(&net, &scn, &cfg(c, 1800.0)).unwrap();
        for r in &out.records {
            assert!((r.length - r.shortest).abs() < 1e-9);
            // At most eleven crossroads on any shortest route of a 6×6 grid.
            assert!(r.delay >= 0.0 && r.delay <= 11.0 * 5.0 + 1e-9);
            assert!(r.exit.is_some());
        }
        assert!(out.report.avg_delay_s > 0.0);
    }
}

#[test]
fn fixed_routes_are_shortest() {
    let net = net6();
    let scn = DemandScenario::preset(3, 20_000.0).unwrap();
    let out = run_benchmark(&net, &scn, &cfg(Controller::Mp1, 300.0)).unwrap();
    assert!(out.records.iter().filter(|r| r.exit.is_some()).all(|r| (r.length - r.shortest).abs() < 1e-9));
}

#[test]
fn every_controller_sees_the_rhythmic_arrival_stream() {
    let net = net6();
    let scn = DemandScenario::preset(5, 15_000.0).unwrap();
    let rc = run(
        &net,
        &RhythmConfig::balanced(10.0, 15.0),
        &scn,
        &SimConfig { router: RouterKind::Spr, horizon: 300.0, drain: 300.0, seed: 5, ..SimConfig::default() },
        &NoClock,
    )
    .unwrap();
    for c in [Controller::Mp1, Controller::MpR, Controller::FcfsR] {
        let out = run_benchmark(&net, &scn, &cfg(c, 300.0)).unwrap();
        assert_eq!(out.report.generated, rc.report.generated);
        let a: Vec<(OdPair, f64)> = out.records.iter().map(|r| (r.od, r.appear)).collect();
        let w = rc.records.first().map_or(0.0, |r| r.appear) - out.records.first().map_or(0.0, |r| r.appear);
        let b: Vec<(OdPair, f64)> = rc.records.iter().map(|r| (r.od, r.appear - w)).collect();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.0, y.0);
            assert!((x.1 - y.1).abs() < 1e-9);
        }
    }
}

#[test]
fn benchmark_runs_are_reproducible() {
    let net = net6();
    let scn = DemandScenario::preset(2, 30_000.0).unwrap();
    for c in [Controller::Mp1, Controller::MpR, Controller::FcfsR] {
        let a = run_benchmark(&net, &scn, &cfg(c, 300.0)).unwrap();
        let b = run_benchmark(&net, &scn, &cfg(c, 300.0)).unwrap();
        assert_eq!(a, b);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]
    #[test]
    fn storage_and_vehicles_are_conserved(
        total in 2_000.0f64..60_000.0,
        id in 1u8..=6,
        which in 0usize..3,
        seed in 0u64..1000,
    ) {
        let net = net6();
        let scn = DemandScenario::preset(id, total).unwrap();
        let c = [Controller::Mp1, Controller::MpR, Controller::FcfsR][which];
        let mut b = Benchmark::new(&net, &scn, &BenchConfig { seed, ..cfg(c, 200.0) }).unwrap();
        while !b.done() {
            b.step().unwrap();
            prop_assert!(b.loads().iter().all(|&(n, cap)| n <= cap));
            prop_assert_eq!(b.waiting() + b.in_network() + b.committed(), b.generated());
        }
    }

    #[test]
    fn reservations_respect_order_and_separation(
        reqs in prop::collection::vec((0.0f64..100.0, any::<bool>()), 1..40),
    ) {
        let mut reqs: Vec<(f64, Axis)> = reqs
            .into_iter()
            .map(|(t, h)| (t, if h { Axis::Horizontal } else { Axis::Vertical }))
            .collect();
        reqs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let t = fcfs_reserve(&reqs, 0.25, 1.0);
        for i in 0..t.len() {
            prop_assert!(t[i] >= reqs[i].0);
            if i > 0 {
                let gap = if reqs[i].1 == reqs[i - 1].1 { 0.25 } else { 1.0 };
                prop_assert!(t[i] >= t[i - 1] + gap - 1e-12);
                // Earliest: either on time or right behind its predecessor.
                prop_assert!(t[i] == reqs[i].0 || (t[i] - (t[i - 1] + gap)).abs() < 1e-12);
            }
        }
    }
}
