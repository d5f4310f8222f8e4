//! Runs configured suites and writes their outputs.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rayon::prelude::*;
use rhythmic_core::bench::run_benchmark;
use rhythmic_core::demand::DemandScenario;
use rhythmic_core::grid::{average_detour_ratio, build_grid, od_pairs, GridNetwork, OdSet, ShortestPaths};
use rhythmic_core::lp::LpOptions;
use rhythmic_core::polyhedral::{enumerate_3path_loops, integrality_trial, shortest_timed_paths, summarize, LoopReport, TrialOutcome};
use rhythmic_core::rhythm::{build_schedule, find_conflicts, passages_alternate, schedule_unchecked, RhythmConfig};
use rhythmic_core::rng::substream;
use rhythmic_core::routing::RoutingInstance;
use rhythmic_core::sim::{Clock, NoClock, SimConfig, SimOutput, Simulation};
use rhythmic_core::speed_curve::{curve_occupancies, street_curves, street_segments};
use serde::Serialize;

use crate::clock::WallClock;
use crate::config::{ControllerId, ExperimentConfig, Suite};
use crate::output::{self, CurveSegmentRow, ResultRow, SpeedSample};

/// Runs a rhythmic-control rollout, capturing the program of one interval.
pub fn run_rc(
    net: &GridNetwork,
    cfg: &RhythmConfig,
    scn: &DemandScenario,
    sim: &SimConfig,
    clock: &dyn Clock,
    capture: Option<i64>,
) -> Result<(SimOutput, Option<RoutingInstance>)> {
    let mut s = Simulation::new(net, cfg, scn, sim)?;
    let mut captured = None;
    while !s.done() {
        let st = s.step(clock)?;
        if Some(st.interval) == capture {
            captured = s.last_instance().cloned();
        }
    }
    Ok((s.finish(), captured))
}

#[derive(Clone, Debug)]
struct Job {
    demand: f64,
    controller: ControllerId,
    t_hat: Option<f64>,
    seed: u64,
}

impl Job {
    fn stem(&self, scenario: u8) -> String {
        let t = self.t_hat.map_or("none".to_string(), |t| format!("{t:.3}"));
        format!("s{scenario}_{}_{}_t{t}_seed{}", self.controller.label(), self.demand, self.seed)
    }
}

/// Outcome of `run_experiment`.
#[derive(Clone, Debug)]
pub struct Summary {
    pub results: PathBuf,
    pub rows: usize,
    pub table: String,
}

fn pool(jobs: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        b = b.num_threads(j.max(1));
    }
    Ok(b.build()?)
}

/// Executes the suite of `cfg`, writing every output under `out`.
pub fn run_experiment(cfg: &ExperimentConfig, out: &Path, jobs: Option<usize>, seed: Option<u64>) -> Result<Summary> {
    let mut cfg = cfg.clone();
    if let Some(s) = seed {
        cfg.seeds = vec![s];
    }
    cfg.validate()?;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let pool = pool(jobs)?;
    pool.install(|| match cfg.suite {
        Suite::Sweep => sweep(&cfg, out),
        Suite::DetourTable => detour_table(&cfg, out),
        Suite::Polyhedral => polyhedral(&cfg, out),
        Suite::SpeedCurves => speed_curves(&cfg, out),
    })
}

fn sweep(cfg: &ExperimentConfig, out: &Path) -> Result<Summary> {
    let spec = cfg.network.spec();
    let net = GridNetwork::from_spec(&spec)?;
    std::fs::write(out.join("network.toml"), output::network_to_toml(&spec)?)?;
    let scn_cfg = cfg.scenario.as_ref().context("sweep needs a [scenario] table")?;
    let mut jobs = Vec::new();
    for &demand in &scn_cfg.demands_vph {
        for c in cfg.controller_ids()? {
            for &seed in &cfg.seeds {
                if c.is_rhythmic() {
                    for &t in &cfg.rhythm.lengths {
                        jobs.push(Job { demand, controller: c, t_hat: Some(t), seed });
                    }
                } else {
                    jobs.push(Job { demand, controller: c, t_hat: None, seed });
                }
            }
        }
    }
    if cfg.output.traces {
        std::fs::create_dir_all(out.join("traces"))?;
    }
    if cfg.output.instance_interval.is_some() {
        std::fs::create_dir_all(out.join("instances"))?;
    }
    let wall = WallClock::new();
    let rows: Vec<ResultRow> = jobs
        .par_iter()
        .map(|job| -> Result<ResultRow> {
            let scn = scn_cfg.scenario(job.demand)?;
            let clock: &dyn Clock = if cfg.sim.timing { &wall } else { &NoClock };
            let stem = job.stem(scn.id);
            let output = match (job.controller.router_kind(), job.controller.bench()) {
                (Some(router), _) => {
                    let rc = cfg.rhythm.config(job.t_hat.unwrap_or(10.0));
                    let sim = cfg.sim.sim(router, job.seed);
                    let (o, inst) = run_rc(&net, &rc, &scn, &sim, clock, cfg.output.instance_interval)?;
                    if let Some(inst) = inst {
                        output::write_instance(&out.join("instances").join(format!("{stem}.json")), &inst)?;
                    }
                    o
                }
                (None, Some(b)) => run_benchmark(&net, &scn, &cfg.bench.config(b, &cfg.sim, cfg.rhythm.speed, job.seed))?,
                (None, None) => unreachable!("every controller is rhythmic or a benchmark"),
            };
            if cfg.output.traces {
                output::write_trace(&out.join("traces").join(format!("{stem}.jsonl")), &output.records)?;
            }
            Ok(ResultRow::new(scn.id, job.demand, job.controller.label(), job.controller.router(), job.t_hat, job.seed, &output.report))
        })
        .collect::<Result<_>>()?;
    let path = out.join(&cfg.output.results);
    output::write_results(&path, &rows)?;
    let mut table = format!(
        "{:<8} {:>10} {:>7} {:>10} {:>9} {:>9} {:>10}\n",
        "ctrl", "demand", "t_hat", "delay_s", "std_s", "speed", "throughput"
    );
    for r in &rows {
        let t = r.t_hat.map_or("-".to_string(), |t| format!("{t:.2}"));
        table += &format!(
            "{:<8} {:>10.0} {:>7} {:>10.2} {:>9.2} {:>9.2} {:>10}\n",
            r.controller, r.demand_vph, t, r.avg_delay_s, r.std_delay_s, r.avg_speed_mps, r.throughput
        );
    }
    Ok(Summary { results: path, rows: rows.len(), table })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DetourRow {
    pub m: usize,
    pub n: usize,
    pub od_set: String,
    pub ratio: f64,
}

pub fn od_set_name(set: OdSet) -> &'static str {
    match set {
        OdSet::Crossroads => "crossroads",
        OdSet::EntranceExit => "entrance_exit",
        OdSet::Terminals => "terminals",
    }
}

/// Detour ratio of every `(m, n)` pair of `sizes` for each OD set.
pub fn detour_rows(sizes: &[usize], sets: &[OdSet], block: f64, junctions: usize) -> Result<Vec<DetourRow>> {
    let mut cells = Vec::new();
    for &set in sets {
        for &m in sizes {
            for &n in sizes {
                cells.push((set, m, n));
            }
        }
    }
    cells
        .par_iter()
        .map(|&(set, m, n)| {
            let net = build_grid(m, n, block, 2, junctions)?;
            let sp = ShortestPaths::new(&net);
            let ratio = average_detour_ratio(&net, &sp, &od_pairs(&net, set))?;
            Ok(DetourRow { m, n, od_set: od_set_name(set).to_string(), ratio })
        })
        .collect()
}

fn detour_table(cfg: &ExperimentConfig, out: &Path) -> Result<Summary> {
    let d = cfg.detour.as_ref().context("detour_table needs a [detour] table")?;
    let rows = detour_rows(&d.sizes, &d.od_sets, cfg.network.block_length, cfg.network.junctions_per_segment)?;
    let path = out.join(&cfg.output.results);
    output::write_csv(&path, &["m", "n", "od_set", "ratio"], &rows)?;
    let mut table = String::new();
    for &set in &d.od_sets {
        table += &format!("{}\n{:>4}", od_set_name(set), "m\\n");
        for n in &d.sizes {
            table += &format!("{n:>7}");
        }
        table.push('\n');
        for &m in &d.sizes {
            table += &format!("{m:>4}");
            for &n in &d.sizes {
                let r = rows.iter().find(|r| r.m == m && r.n == n && r.od_set == od_set_name(set)).map_or(f64::NAN, |r| r.ratio);
                table += &format!("{r:>7.3}");
            }
            table.push('\n');
        }
    }
    Ok(Summary { results: path, rows: rows.len(), table })
}

/// Three-path loop report over one shortest path per terminal OD.
pub fn loop_report(net: &GridNetwork, rc: &RhythmConfig, interval: i64) -> Result<LoopReport> {
    let horizon = (interval as f64 + 4.0 * (net.m() + net.n()) as f64) * rc.rhythm + 3600.0;
    let sched = build_schedule(rc, net, horizon)?;
    let paths = shortest_timed_paths(net, rc, &sched, OdSet::Terminals, interval)?;
    Ok(enumerate_3path_loops(net, &paths))
}

/// Monte-Carlo integrality trials in parallel; trial `i` uses substream `i`.
pub fn integrality_trials(net: &GridNetwork, rc: &RhythmConfig, interval: i64, trials: usize, seed: u64, lp: LpOptions) -> Result<Vec<TrialOutcome>> {
    let horizon = (interval as f64 + 4.0 * (net.m() + net.n()) as f64) * rc.rhythm + 3600.0;
    let sched = build_schedule(rc, net, horizon)?;
    let paths = shortest_timed_paths(net, rc, &sched, OdSet::Terminals, interval)?;
    (0..trials)
        .into_par_iter()
        .map(|i| Ok(integrality_trial(net, &paths, &mut substream(seed, "integrality", i as u64), lp)?))
        .collect()
}

fn polyhedral(cfg: &ExperimentConfig, out: &Path) -> Result<Summary> {
    let p = cfg.polyhedral.as_ref().context("polyhedral needs a [polyhedral] table")?;
    let rc = cfg.rhythm.config(cfg.rhythm.lengths.first().copied().unwrap_or(10.0));
    let mut table = String::new();
    let reports: Vec<LoopReport> = p
        .loop_sizes
        .iter()
        .map(|&s| {
            let net = build_grid(s, s, cfg.network.block_length, cfg.network.lanes, cfg.network.junctions_per_segment)?;
            loop_report(&net, &rc, p.interval)
        })
        .collect::<Result<_>>()?;
    output::write_csv(
        &out.join("loops.csv"),
        &["m", "n", "paths", "combinations", "temporal_pairs", "loops", "probability"],
        &reports,
    )?;
    for r in &reports {
        table += &format!(
            "{}x{}: paths {} combinations {:.3e} loops {} probability {:.3e}\n",
            r.m, r.n, r.paths, r.combinations, r.loops, r.probability
        );
    }
    let mut rows = reports.len();
    if p.trial_size > 0 && p.trials > 0 {
        let net = build_grid(p.trial_size, p.trial_size, cfg.network.block_length, cfg.network.lanes, cfg.network.junctions_per_segment)?;
        for &seed in &cfg.seeds {
            let outcomes = integrality_trials(&net, &rc, p.interval, p.trials, seed, cfg.sim.lp.unwrap_or_default())?;
            let s = summarize(&outcomes);
            output::write_csv(
                &out.join(format!("trials_seed{seed}.csv")),
                &["first_integral", "gap", "columns", "rows", "rounds"],
                &outcomes,
            )?;
            table += &format!(
                "{}x{} seed {seed}: {} trials, one-time integral {:.2}%, max gap {:.4}%\n",
                p.trial_size,
                p.trial_size,
                s.trials,
                100.0 * s.integral_rate,
                100.0 * s.max_gap
            );
            rows += 1;
            #[derive(Serialize)]
            struct Row {
                seed: u64,
                trials: usize,
                integral_rate: f64,
                max_gap: f64,
            }
            let summary = Row { seed, trials: s.trials, integral_rate: s.integral_rate, max_gap: s.max_gap };
            output::write_csv(&out.join(format!("integrality_seed{seed}.csv")), &["seed", "trials", "integral_rate", "max_gap"], &[summary])?;
        }
    }
    Ok(Summary { results: out.join("loops.csv"), rows, table })
}

fn speed_curves(cfg: &ExperimentConfig, out: &Path) -> Result<Summary> {
    let s = cfg.speed_curves.as_ref().context("speed_curves needs a [speed_curves] table")?;
    let spec = cfg.network.spec();
    let net = GridNetwork::from_spec(&spec)?;
    std::fs::write(out.join("network.toml"), output::network_to_toml(&spec)?)?;
    let t_hat = cfg.rhythm.lengths.first().copied().unwrap_or(10.0);
    let rc = cfg.rhythm.config(t_hat);
    let k = s.kinematics();
    let curves = street_curves(&net, &k, s.v_max, t_hat)?;
    let mut samples = Vec::new();
    let mut segments = Vec::new();
    for (street, c) in curves.iter().enumerate() {
        samples.extend(c.sample(s.dt).into_iter().map(|(t, v)| SpeedSample { street, t, v }));
        for (i, seg) in c.segments.iter().enumerate() {
            segments.push(CurveSegmentRow {
                street,
                segment: i,
                length: seg.length,
                multiple: seg.multiple,
                start: seg.start,
                duration: seg.duration,
                theta: seg.theta,
                v_in: seg.v_in,
                v_out: seg.v_out,
            });
        }
        debug_assert_eq!(street_segments(&net, street).len(), c.segments.len());
    }
    let path = out.join(&cfg.output.results);
    output::write_csv(&path, &["street", "t", "v"], &samples)?;
    output::write_csv(
        &out.join("curve_segments.csv"),
        &["street", "segment", "length", "multiple", "start", "duration", "theta", "v_in", "v_out"],
        &segments,
    )?;
    let sched = schedule_unchecked(&rc, &net, s.check_horizon);
    let occ = curve_occupancies(&rc, &net, &sched, &curves, s.check_horizon);
    let conflicts = find_conflicts(&occ);
    let table = format!(
        "{} streets, {} segments; chained schedule: {} conflicts, passages alternate: {}\n",
        curves.len(),
        segments.len(),
        conflicts.len(),
        passages_alternate(&occ)
    );
    Ok(Summary { results: path, rows: samples.len(), table })
}
