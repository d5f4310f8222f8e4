//! Acceptance checks, one per criterion, each reporting pass or fail with
//! the measured values.

use std::fmt;
use std::time::Instant;

use anyhow::Result;
use rand::Rng;
use rayon::prelude::*;
use rhythmic_core::bench::{run_benchmark, BenchConfig, Controller};
use rhythmic_core::demand::DemandScenario;
use rhythmic_core::grid::{build_grid, GridNetwork, NetworkSpec, OdPair, OdSet};
use rhythmic_core::lp::LpOptions;
use rhythmic_core::polyhedral::{is_locally_separable, is_totally_unimodular, summarize};
use rhythmic_core::rhythm::{build_schedule, find_conflicts, passages_alternate, schedule_unchecked, verify_conflict_free, RhythmConfig};
use rhythmic_core::rng::substream;
use rhythmic_core::routing::{
    build_mpr, build_spr, penalty, solve_rounding, OdQueue, ReservationTable, RouterKind, RoutingInstance, TemporalLink, TimedPath,
    INTEGRALITY_TOL,
};
use rhythmic_core::sim::{MetricsReport, NoClock, SimConfig, Simulation};
use rhythmic_core::speed_curve::{curve_occupancies, street_curves, street_segments, Kinematics};

use crate::clock::WallClock;
use crate::experiment::{detour_rows, integrality_trials, loop_report, od_set_name, run_rc};

/// Criteria whose published targets this implementation does not reach.
pub const KNOWN_SHORTFALLS: [u8; 3] = [1, 5, 6];

/// Published average detour ratios, rows m = 2..16, columns n = 2..16.
pub const REFERENCE_DETOUR: [[f64; 8]; 8] = [
    [1.668, 1.528, 1.423, 1.353, 1.303, 1.266, 1.238, 1.213],
    [1.528, 1.371, 1.296, 1.251, 1.221, 1.198, 1.181, 1.166],
    [1.423, 1.296, 1.237, 1.202, 1.179, 1.163, 1.150, 1.140],
    [1.353, 1.251, 1.202, 1.172, 1.152, 1.139, 1.129, 1.121],
    [1.303, 1.221, 1.179, 1.152, 1.135, 1.122, 1.114, 1.111],
    [1.266, 1.198, 1.163, 1.139, 1.122, 1.110, 1.102, 1.096],
    [1.238, 1.181, 1.150, 1.129, 1.114, 1.102, 1.093, 1.087],
    [1.213, 1.166, 1.140, 1.121, 1.111, 1.096, 1.087, 1.081],
];

#[derive(Clone, Copy, Debug)]
pub struct VerifyOptions {
    /// Full-size Monte Carlo instead of the smoke variant.
    pub full: bool,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { full: false, seed: 1 }
    }
}

#[derive(Clone, Debug)]
pub struct Criterion {
    pub id: u8,
    pub title: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] {:>2} {}: {}", self.id, self.title, self.detail)
    }
}

pub const TITLES: [&str; 12] = [
    "detour-ratio table",
    "conflict-freedom property suite",
    "interconnection-loop example",
    "local separability implies total unimodularity",
    "three-path loop enumeration",
    "Monte-Carlo integrality",
    "scenario-1 delay and speed anchors",
    "solver scalability",
    "rhythm-length trade-off",
    "benchmark ordering",
    "speed-curve verification",
    "rounding versus exhaustive optimum",
];

/// Runs criterion `id` (1..=12).
pub fn check(id: u8, opts: &VerifyOptions) -> Result<Criterion> {
    let (pass, detail) = match id {
        1 => detour_table()?,
        2 => conflict_freedom(opts.seed)?,
        3 => loop_example()?,
        4 => separability(opts.seed)?,
        5 => loop_enumeration()?,
        6 => integrality(opts)?,
        7 => scenario_anchors(opts.seed)?,
        8 => scalability(opts.seed)?,
        9 => rhythm_tradeoff(opts.seed)?,
        10 => benchmark_ordering(opts.seed)?,
        11 => speed_curves()?,
        12 => rounding_oracle(opts.seed)?,
        _ => anyhow::bail!("no criterion {id}; expected 1..=12"),
    };
    Ok(Criterion { id, title: TITLES[id as usize - 1], pass, detail })
}

fn net6() -> Result<GridNetwork> {
    Ok(build_grid(6, 6, 150.0, 2, 1)?)
}

fn detour_table() -> Result<(bool, String)> {
    let t0 = Instant::now();
    let sizes: Vec<usize> = (1..=8).map(|k| 2 * k).collect();
    let sets = [OdSet::Crossroads, OdSet::EntranceExit];
    let rows = detour_rows(&sizes, &sets, 150.0, 0)?;
    let secs = t0.elapsed().as_secs_f64();
    let mut parts = Vec::new();
    let mut matched = None;
    for set in sets {
        let mut worst: f64 = 0.0;
        for r in rows.iter().filter(|r| r.od_set == od_set_name(set)) {
            let want = REFERENCE_DETOUR[r.m / 2 - 1][r.n / 2 - 1];
            worst = worst.max((r.ratio - want).abs());
        }
        if worst <= 0.005 && matched.is_none() {
            matched = Some(od_set_name(set));
        }
        parts.push(format!("{} max |err| {worst:.3}", od_set_name(set)));
    }
    let pass = matched.is_some() && secs < 10.0;
    Ok((pass, format!("{}; matching set: {}; {secs:.2} s (tol 0.005, < 10 s)", parts.join(", "), matched.unwrap_or("none"))))
}

fn conflict_freedom(seed: u64) -> Result<(bool, String)> {
    let t0 = Instant::now();
    let rhythms = [10.0 / 3.0, 5.0, 10.0];
    let sizes = [2usize, 4, 6, 8];
    let mut valid_bad = 0;
    for i in 0..200u64 {
        let mut rng = substream(seed, "conflict_valid", i);
        let t = rhythms[rng.gen_range(0..3)];
        let a = rng.gen_range(1..=3) as f64;
        let beta = [0.25, 0.5, 0.75][rng.gen_range(0..3)];
        let v = rng.gen_range(8.0..20.0);
        let (m, n) = (sizes[rng.gen_range(0..4)], sizes[rng.gen_range(0..4)]);
        let mut cfg = RhythmConfig::balanced(t, v);
        cfg.beta = beta;
        cfg.platoon_length = rng.gen_range(0.05..=1.0) * beta * t * v;
        cfg.platoon_length_vertical = Some(rng.gen_range(0.05..=1.0) * (1.0 - beta) * t * v);
        let mut spec = NetworkSpec::homogeneous(m, n, a * t * v, 2, 1);
        spec.approach_length = Some(1.5 * t * v);
        let net = GridNetwork::from_spec(&spec)?;
        let horizon = rng.gen_range(60.0..3600.0);
        let sched = build_schedule(&cfg, &net, horizon)?;
        if !verify_conflict_free(&cfg, &net, &sched, horizon).is_empty() {
            valid_bad += 1;
        }
    }
    let mut invalid_missed = 0;
    for i in 0..50u64 {
        let mut rng = substream(seed, "conflict_invalid", i);
        let t = rhythms[rng.gen_range(0..3)];
        let size = sizes[rng.gen_range(0..4)];
        let (cfg, net) = if i % 2 == 0 {
            // Block travel time an odd number of half rhythms.
            let half_steps = [1.0, 3.0, 5.0][rng.gen_range(0..3)];
            (RhythmConfig::balanced(t, 15.0), build_grid(size, size, half_steps * 0.5 * t * 15.0, 2, 0)?)
        } else {
            let mut cfg = RhythmConfig::balanced(t, 15.0);
            cfg.platoon_length = rng.gen_range(0.55..0.95) * t * 15.0;
            (cfg, build_grid(size, size, t * 15.0, 2, 0)?)
        };
        let sched = schedule_unchecked(&cfg, &net, 600.0);
        if verify_conflict_free(&cfg, &net, &sched, 600.0).is_empty() {
            invalid_missed += 1;
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    Ok((
        valid_bad == 0 && invalid_missed == 0 && secs < 30.0,
        format!("200 valid configs with conflicts: {valid_bad}; 50 invalid configs without: {invalid_missed}; {secs:.2} s (< 30 s)"),
    ))
}

fn synth(id: usize, rows: &[usize], cost: f64) -> TimedPath {
    TimedPath {
        od: OdPair { origin: id, destination: id + 1000 },
        links: rows.to_vec(),
        start: 0.0,
        arrival: 0.0,
        temporal: rows.iter().map(|&r| TemporalLink { link: r, interval: 0 }).collect(),
        length: 0.0,
        cost,
    }
}

/// Exact optimum by enumerating every integer assignment.
pub fn exhaustive_optimum(inst: &RoutingInstance) -> f64 {
    let n = inst.paths.len();
    let mut bound = vec![0u32; n];
    for c in &inst.commodities {
        for &p in &c.paths {
            bound[p] = c.demand;
        }
    }
    let mut flows = vec![0u32; n];
    let mut best = f64::INFINITY;
    loop {
        if inst.is_feasible(&flows) {
            best = best.min(inst.objective(&flows));
        }
        let mut k = 0;
        while k < n && flows[k] == bound[k] {
            flows[k] = 0;
            k += 1;
        }
        if k == n {
            return best;
        }
        flows[k] += 1;
    }
}

fn loop_example() -> Result<(bool, String)> {
    let paths = [synth(0, &[1, 2], 0.0), synth(1, &[0, 2], 0.0), synth(2, &[0, 1], 0.0)];
    let queues = paths
        .iter()
        .map(|p| OdQueue { od: p.od, demand: 1, penalty: 1.0, paths: vec![p.clone()] })
        .collect();
    let inst = build_spr(0, queues, &ReservationTable::uniform(3, 1));
    let r = solve_rounding(&inst, LpOptions::default(), INTEGRALITY_TOL)?;
    // The objective counts waiting vehicles, so admissions are demand minus it.
    let demand = inst.total_demand() as f64;
    let lp = demand - r.lower;
    let int = demand - exhaustive_optimum(&inst);
    let pass = (lp - 1.5).abs() < 1e-9 && (int - 1.0).abs() < 1e-9;
    Ok((pass, format!("LP optimum {lp} (want 1.5), integer optimum {int} (want 1)")))
}

fn separability(seed: u64) -> Result<(bool, String)> {
    let mut separable = 0;
    let mut counter = 0;
    for i in 0..10_000u64 {
        let mut rng = substream(seed, "separability", i);
        let (r, c) = (rng.gen_range(1..=6), rng.gen_range(1..=6));
        let p: f64 = rng.gen();
        let m: Vec<Vec<u8>> = (0..r).map(|_| (0..c).map(|_| rng.gen_bool(p) as u8).collect()).collect();
        if is_locally_separable(&m, 6)?.is_none() {
            separable += 1;
            if is_totally_unimodular(&m, 6)?.is_some() {
                counter += 1;
            }
        }
    }
    Ok((counter == 0, format!("10000 matrices, {separable} locally separable, {counter} not totally unimodular")))
}

fn loop_enumeration() -> Result<(bool, String)> {
    let rc = RhythmConfig::balanced(10.0, 15.0);
    let t0 = Instant::now();
    let mut parts = Vec::new();
    let mut reports = Vec::new();
    for size in [2usize, 4, 6] {
        let r = loop_report(&build_grid(size, size, 150.0, 2, 1)?, &rc, 20)?;
        parts.push(format!("{size}x{size}: {} paths, {} loops, p {:.2e}", r.paths, r.loops, r.probability));
        reports.push(r);
    }
    let secs = t0.elapsed().as_secs_f64();
    let pass = reports[0].loops == 0 && reports[1].loops == 0 && reports[2].probability < 1e-6 && secs < 600.0;
    Ok((pass, format!("{}; {secs:.1} s (want 0 / 0 / p ~ 1e-7)", parts.join("; "))))
}

fn integrality(opts: &VerifyOptions) -> Result<(bool, String)> {
    let trials = if opts.full { 10_000 } else { 1_000 };
    let limit = if opts.full { 1200.0 } else { 120.0 };
    let t0 = Instant::now();
    let net = net6()?;
    let outcomes = integrality_trials(&net, &RhythmConfig::balanced(10.0, 15.0), 20, trials, opts.seed, LpOptions::default())?;
    let s = summarize(&outcomes);
    let secs = t0.elapsed().as_secs_f64();
    let pass = s.integral_rate >= 0.995 && s.max_gap <= 1e-3 && secs < limit;
    Ok((
        pass,
        format!(
            "{trials} trials: one-time integral {:.2}% (want >= 99.5%), max gap {:.4}% (want <= 0.1%), {secs:.1} s (< {limit} s)",
            100.0 * s.integral_rate,
            100.0 * s.max_gap
        ),
    ))
}

fn rc_report(net: &GridNetwork, rhythm: f64, demand: f64, router: RouterKind, seed: u64) -> Result<MetricsReport> {
    let scn = DemandScenario::preset(1, demand)?;
    let sim = SimConfig { router, seed, ..SimConfig::default() };
    Ok(run_rc(net, &RhythmConfig::balanced(rhythm, 15.0), &scn, &sim, &NoClock, None)?.0.report)
}

fn bench_report(net: &GridNetwork, c: Controller, demand: f64, seed: u64) -> Result<MetricsReport> {
    let scn = DemandScenario::preset(1, demand)?;
    Ok(run_benchmark(net, &scn, &BenchConfig { controller: c, seed, ..BenchConfig::default() })?.report)
}

fn scenario_anchors(seed: u64) -> Result<(bool, String)> {
    let net = net6()?;
    let lo = rc_report(&net, 10.0, 10_000.0, RouterKind::Spr, seed)?;
    let hi = rc_report(&net, 10.0, 60_000.0, RouterKind::Spr, seed)?;
    let pass = (4.0..=7.0).contains(&lo.avg_delay_s) && (12.0..=14.0).contains(&lo.avg_speed_mps) && hi.avg_delay_s <= 30.0;
    Ok((
        pass,
        format!(
            "10k vph: delay {:.2} s in [4, 7], speed {:.2} m/s in [12, 14]; 60k vph: delay {:.2} s <= 30",
            lo.avg_delay_s, lo.avg_speed_mps, hi.avg_delay_s
        ),
    ))
}

/// Wall time of one routing interval once at least `queued` vehicles wait.
pub fn interval_time(net: &GridNetwork, router: RouterKind, queued: u64, seed: u64) -> Result<(u64, usize, f64)> {
    let scn = DemandScenario::preset(1, 150_000.0)?;
    let sim = SimConfig { router, seed, ..SimConfig::default() };
    let mut s = Simulation::new(net, &RhythmConfig::balanced(10.0, 15.0), &scn, &sim)?;
    while s.queued() < queued {
        s.step(&NoClock)?;
    }
    let q = s.queued();
    let t0 = Instant::now();
    let st = s.step(&WallClock::new())?;
    Ok((q, st.columns, t0.elapsed().as_secs_f64()))
}

fn scalability(seed: u64) -> Result<(bool, String)> {
    let net = net6()?;
    let (qs, cs, spr) = interval_time(&net, RouterKind::Spr, 2000, seed)?;
    let (qm, cm, mpr) = interval_time(&net, RouterKind::Mpr, 2000, seed)?;
    Ok((
        spr < 1.0 && mpr < 5.0,
        format!("SPR {spr:.3} s ({qs} queued, {cs} paths; < 1 s), MPR {mpr:.3} s ({qm} queued, {cm} paths; < 5 s)"),
    ))
}

/// Demand at which `b` starts beating `a` for good, linearly interpolated.
pub fn crossover(demands: &[f64], a: &[f64], b: &[f64]) -> Option<f64> {
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let last_bad = diff.iter().rposition(|&d| d <= 0.0)?;
    if last_bad + 1 >= diff.len() {
        return None;
    }
    let (d0, d1) = (diff[last_bad], diff[last_bad + 1]);
    let (x0, x1) = (demands[last_bad], demands[last_bad + 1]);
    Some(x0 + (x1 - x0) * (-d0) / (d1 - d0))
}

fn rhythm_tradeoff(seed: u64) -> Result<(bool, String)> {
    let net = net6()?;
    let demands = [
        5_000.0, 7_500.0, 10_000.0, 12_500.0, 15_000.0, 20_000.0, 25_000.0, 30_000.0, 35_000.0, 40_000.0, 45_000.0, 50_000.0,
        55_000.0, 60_000.0,
    ];
    let rhythms = [10.0 / 3.0, 5.0, 10.0];
    let cells: Vec<(usize, usize)> = (0..3).flat_map(|r| (0..demands.len()).map(move |d| (r, d))).collect();
    let delays: Vec<f64> = cells
        .par_iter()
        .map(|&(r, d)| Ok(rc_report(&net, rhythms[r], demands[d], RouterKind::Spr, seed)?.avg_delay_s))
        .collect::<Result<_>>()?;
    let row = |r: usize| &delays[r * demands.len()..(r + 1) * demands.len()];
    let winners: Vec<usize> = (0..demands.len())
        .map(|d| (0..3).min_by(|&a, &b| row(a)[d].total_cmp(&row(b)[d])).unwrap())
        .collect();
    let mut order = winners.clone();
    order.dedup();
    let c1 = crossover(&demands, row(0), row(1));
    let c2 = crossover(&demands, row(1), row(2));
    let within = |c: Option<f64>, target: f64| c.map_or(false, |c| (c - target).abs() <= 0.25 * target);
    let pass = order == [0, 1, 2] && within(c1, 10_000.0) && within(c2, 35_000.0);
    let fmt = |c: Option<f64>| c.map_or("none".to_string(), |c| format!("{c:.0}"));
    let names = ["10/3", "5", "10"];
    let seq: Vec<&str> = order.iter().map(|&r| names[r]).collect();
    Ok((
        pass,
        format!(
            "best t_hat by demand {}; 10/3->5 at {} vph (10000 +-25%), 5->10 at {} vph (35000 +-25%)",
            seq.join(" -> "),
            fmt(c1),
            fmt(c2)
        ),
    ))
}

fn benchmark_ordering(seed: u64) -> Result<(bool, String)> {
    let net = net6()?;
    let demands: Vec<f64> = (1..=12).map(|k| 5_000.0 * k as f64).collect();
    let ctrls = [None, Some(Controller::Mp1), Some(Controller::MpR), Some(Controller::FcfsR)];
    let cells: Vec<(usize, usize)> = (0..ctrls.len()).flat_map(|c| (0..demands.len()).map(move |d| (c, d))).collect();
    let reports: Vec<MetricsReport> = cells
        .par_iter()
        .map(|&(c, d)| match ctrls[c] {
            None => rc_report(&net, 10.0, demands[d], RouterKind::Spr, seed),
            Some(b) => bench_report(&net, b, demands[d], seed),
        })
        .collect::<Result<_>>()?;
    let at = |c: usize, d: usize| &reports[c * demands.len() + d];
    let (rc, fcfs) = (0, 3);
    let low: Vec<usize> = (0..demands.len()).filter(|&d| demands[d] <= 10_000.0).collect();
    let a = low.iter().all(|&d| at(fcfs, d).avg_delay_s < at(rc, d).avg_delay_s);
    let high: Vec<usize> = (0..demands.len()).filter(|&d| (40_000.0..=50_000.0).contains(&demands[d])).collect();
    let b = high.iter().all(|&d| at(fcfs, d).std_delay_s > 100.0 && at(rc, d).std_delay_s < 10.0);
    let rc_mono = (1..demands.len()).all(|d| at(rc, d).throughput >= at(rc, d - 1).throughput);
    let drops: Vec<&str> = (1..ctrls.len())
        .filter(|&c| (1..demands.len()).any(|d| at(c, d).throughput < at(c, d - 1).throughput))
        .map(|c| ["RC-SPR", "MP-1", "MP-R", "FCFS-R"][c])
        .collect();
    let c = rc_mono && !drops.is_empty();
    let low_txt: Vec<String> = low
        .iter()
        .map(|&d| format!("{:.0}: FCFS-R {:.2} vs RC {:.2}", demands[d], at(fcfs, d).avg_delay_s, at(rc, d).avg_delay_s))
        .collect();
    let high_txt: Vec<String> = high
        .iter()
        .map(|&d| format!("{:.0}: FCFS-R std {:.1} RC std {:.1}", demands[d], at(fcfs, d).std_delay_s, at(rc, d).std_delay_s))
        .collect();
    Ok((
        a && b && c,
        format!(
            "(a) {} [{}]; (b) {} [{}]; (c) {} [RC throughput monotone: {rc_mono}; drops: {}]",
            a,
            low_txt.join(", "),
            b,
            high_txt.join(", "),
            c,
            if drops.is_empty() { "none".to_string() } else { drops.join(", ") }
        ),
    ))
}

fn speed_curves() -> Result<(bool, String)> {
    let k = Kinematics::new(15.0, 2.5, 3.0, 12.0);
    let spec = NetworkSpec {
        m: 4,
        n: 4,
        block_lengths_h: vec![150.0, 200.0, 120.0],
        block_lengths_v: vec![150.0, 200.0, 120.0],
        approach_length: None,
        lanes: 2,
        junctions_per_segment: 0,
    };
    let net = GridNetwork::from_spec(&spec)?;
    let rhythm = 10.0;
    let curves = street_curves(&net, &k, 15.0, rhythm)?;
    let mut worst_dist: f64 = 0.0;
    let mut duration_ok = true;
    let mut bounds_ok = true;
    for (s, c) in curves.iter().enumerate() {
        for (seg, &len) in c.segments.iter().zip(&street_segments(&net, s)) {
            duration_ok &= seg.duration == seg.multiple as f64 * rhythm;
            // Composite Simpson at 1 ms is exact to rounding on piecewise-linear speeds.
            let n = (seg.duration * 1000.0).round() as usize;
            let h = seg.duration / n as f64;
            let mut sum = seg.speed_at(0.0) + seg.speed_at(seg.duration);
            let mut prev = seg.speed_at(0.0);
            for i in 1..=n {
                let v = seg.speed_at(i as f64 * h);
                if i < n {
                    sum += if i % 2 == 1 { 4.0 } else { 2.0 } * v;
                }
                let dv = (v - prev) / h;
                bounds_ok &= (-1e-9..=k.v_max + 1e-9).contains(&v) && dv <= k.accel + 1e-6 && dv >= -k.decel - 1e-6;
                prev = v;
            }
            bounds_ok &= seg.v_out >= k.v_min_cross - 1e-9;
            worst_dist = worst_dist.max((sum * h / 3.0 - len).abs());
        }
    }
    let cfg = RhythmConfig::balanced(rhythm, 15.0);
    let sched = schedule_unchecked(&cfg, &net, 600.0);
    let occ = curve_occupancies(&cfg, &net, &sched, &curves, 600.0);
    let conflicts = find_conflicts(&occ).len();
    let pass = worst_dist <= 1e-6 && duration_ok && bounds_ok && conflicts == 0 && passages_alternate(&occ);
    Ok((
        pass,
        format!(
            "{} curves; max distance error {worst_dist:.2e} m (<= 1e-6); durations multiples of t_hat: {duration_ok}; kinematic bounds: {bounds_ok}; conflicts {conflicts}",
            curves.len()
        ),
    ))
}

fn random_instance(seed: u64, i: u64) -> RoutingInstance {
    let mut rng = substream(seed, "rounding_oracle", i);
    let mpr = rng.gen_bool(0.5);
    let n_ods = rng.gen_range(1..5);
    let mut count = 0;
    let mut queues = Vec::new();
    for od in 0..n_ods {
        let demand = rng.gen_range(1..4);
        let starved = rng.gen_range(1..5);
        let n_paths = if mpr { rng.gen_range(1..3) } else { 1 };
        let mut paths = Vec::new();
        for _ in 0..n_paths {
            if count == 8 {
                break;
            }
            count += 1;
            let mut rows: Vec<usize> = (0..rng.gen_range(1..4)).map(|_| rng.gen_range(0..6)).collect();
            rows.sort_unstable();
            rows.dedup();
            let cost = [0.0, 10.0, 20.0, 30.0][rng.gen_range(0..4)];
            paths.push(synth(od, &rows, cost));
        }
        queues.push(OdQueue { od: OdPair { origin: od, destination: od + 1000 }, demand, penalty: penalty(starved, 10.0), paths });
    }
    let mut table = ReservationTable::uniform(6, 4);
    for l in 0..6 {
        let cap = rng.gen_range(0..4);
        table.reserve(TemporalLink { link: l, interval: 0 }, 4 - cap).expect("within capacity");
    }
    if mpr {
        build_mpr(0, queues, &table, 40.0)
    } else {
        build_spr(0, queues, &table)
    }
}

fn rounding_oracle(seed: u64) -> Result<(bool, String)> {
    let results: Vec<(bool, bool, bool)> = (0..1000u64)
        .into_par_iter()
        .map(|i| {
            let inst = random_instance(seed, i);
            let r = solve_rounding(&inst, LpOptions::default(), INTEGRALITY_TOL)?;
            let opt = exhaustive_optimum(&inst);
            let zero_gap = r.gap == 0.0;
            let matches = !zero_gap || (r.upper - opt).abs() < 1e-6;
            let not_better = r.upper >= opt - 1e-6 && inst.is_feasible(&r.flows);
            Ok((zero_gap, matches, not_better))
        })
        .collect::<Result<_>>()?;
    let zero = results.iter().filter(|r| r.0).count();
    let mismatched = results.iter().filter(|r| !r.1).count();
    let better = results.iter().filter(|r| !r.2).count();
    Ok((
        mismatched == 0 && better == 0,
        format!("1000 instances, {zero} with zero gap; zero-gap mismatches {mismatched}; better than optimum or infeasible {better}"),
    ))
}

/// Runs the given criteria in order.
pub fn run(ids: &[u8], opts: &VerifyOptions) -> Result<Vec<Criterion>> {
    ids.iter().map(|&id| check(id, opts)).collect()
}
