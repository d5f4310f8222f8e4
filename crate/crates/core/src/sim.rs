//! Rolling-horizon rollout of rhythmic control: arrivals queue at their
//! origins, every routing interval admits vehicles into platoons, and each
//! admitted trip is fixed analytically by its timed path.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use hashbrown::HashMap;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::demand::{generate_arrivals, od_rates, DemandScenario, OdRate};
use crate::error::Error;
use crate::grid::{GridNetwork, OdPair, Route, ShortestPaths};
use crate::lp::LpOptions;
use crate::rhythm::{build_schedule, EntrySchedule, RhythmConfig};
use crate::rng::substream;
use crate::routing::{
    build_mpr, build_spr, commit_reservations, compute_incidence, interval_of, next_platoon, penalty, solve_rounding,
    OdQueue, ReservationTable, RouterKind, RoutingInstance, TimedPath, INTEGRALITY_TOL,
};

/// Width of the arrival windows shared by every controller, seconds.
pub const ARRIVAL_WINDOW: f64 = 10.0;

/// Source of wall-clock time for solve timings.
pub trait Clock {
    fn now_ms(&self) -> f64;
}

/// Clock for environments without a timer; every timing reads 0.
#[derive(Clone, Copy, Debug, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn now_ms(&self) -> f64 {
        0.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub router: RouterKind,
    /// Arrivals are generated on `[0, horizon)`.
    pub horizon: f64,
    /// Extra time after the horizon during which queues keep being served.
    pub drain: f64,
    /// Allowed detour over the shortest route for multiple-path routing, s.
    pub detour_budget: f64,
    /// Cap on candidate routes per OD for multiple-path routing.
    pub max_routes: usize,
    pub seed: u64,
    #[serde(default)]
    pub lp: Option<LpOptions>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            router: RouterKind::Spr,
            horizon: 1800.0,
            drain: 1800.0,
            detour_budget: 40.0,
            max_routes: 32,
            seed: 1,
            lp: None,
        }
    }
}

/// One vehicle's trip. Times are absolute seconds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VehicleRecord {
    pub id: u64,
    pub od: OdPair,
    pub appear: f64,
    /// Epoch of entering the network; `None` if never admitted.
    pub entry: Option<f64>,
    /// Epoch of reaching the destination.
    pub exit: Option<f64>,
    pub length: f64,
    pub shortest: f64,
    /// Waiting at the origin plus detour time.
    pub delay: f64,
}

impl VehicleRecord {
    pub fn wait(&self) -> Option<f64> {
        self.entry.map(|e| e - self.appear)
    }
}

/// Aggregates of a run, shared by every controller.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub generated: u64,
    pub admitted: u64,
    /// Vehicles reaching their destination within the horizon.
    pub throughput: u64,
    pub avg_delay_s: f64,
    pub std_delay_s: f64,
    /// Total distance over total time including waiting at origins.
    pub avg_speed_mps: f64,
    pub mean_solve_ms: f64,
    pub p95_solve_ms: f64,
    pub max_queue: u64,
}

/// Per-interval bookkeeping.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalStats {
    pub interval: i64,
    pub queued: u64,
    pub eligible: u64,
    pub admitted: u64,
    pub columns: usize,
    pub rows: usize,
    pub gap: f64,
    pub solve_ms: f64,
}

/// Mean, standard deviation and 95th percentile.
pub fn moments(xs: &[f64]) -> (f64, f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    let mut s = xs.to_vec();
    s.sort_by(f64::total_cmp);
    let idx = libm::ceil(0.95 * n) as usize;
    (mean, libm::sqrt(var), s[idx.clamp(1, s.len()) - 1])
}

/// Metrics over finished trip records. Vehicles never admitted count with
/// the delay accrued up to `end`.
pub fn report(records: &[VehicleRecord], horizon: f64, solve_ms: &[f64], max_queue: u64) -> MetricsReport {
    let delays: Vec<f64> = records.iter().map(|r| r.delay).collect();
    let (avg_delay_s, std_delay_s, _) = moments(&delays);
    let (mean_solve_ms, _, p95_solve_ms) = moments(solve_ms);
    let (mut dist, mut time) = (0.0, 0.0);
    for r in records {
        if let Some(x) = r.exit {
            dist += r.length;
            time += x - r.appear;
        }
    }
    MetricsReport {
        generated: records.len() as u64,
        admitted: records.iter().filter(|r| r.entry.is_some()).count() as u64,
        throughput: records.iter().filter(|r| r.exit.map_or(false, |x| x <= horizon)).count() as u64,
        avg_delay_s,
        std_delay_s,
        avg_speed_mps: if time > 0.0 { dist / time } else { 0.0 },
        mean_solve_ms,
        p95_solve_ms,
        max_queue,
    }
}

/// Full output of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimOutput {
    pub report: MetricsReport,
    pub records: Vec<VehicleRecord>,
    pub intervals: Vec<IntervalStats>,
}

/// State of a rhythmic-control rollout.
pub struct Simulation<'a> {
    net: &'a GridNetwork,
    cfg: RhythmConfig,
    scn: DemandScenario,
    sim: SimConfig,
    sp: ShortestPaths,
    schedule: EntrySchedule,
    rates: Vec<OdRate>,
    reservations: ReservationTable,
    queues: Vec<VecDeque<u64>>,
    starved: Vec<u32>,
    routes: HashMap<usize, Vec<Route>>,
    path_rng: ChaCha8Rng,
    records: Vec<VehicleRecord>,
    next_window: u64,
    warmup: f64,
    interval: i64,
    solve_ms: Vec<f64>,
    max_queue: u64,
    stats: Vec<IntervalStats>,
    last: Option<RoutingInstance>,
}

impl<'a> Simulation<'a> {
    pub fn new(net: &'a GridNetwork, cfg: &RhythmConfig, scn: &DemandScenario, sim: &SimConfig) -> Result<Self, Error> {
        cfg.validate(net)?;
        let rates = od_rates(net, scn)?;
        // Long enough for any admitted trip to finish on scheduled platoons.
        let span = 2.0 * sim.horizon + sim.drain + 4.0 * (net.m() + net.n()) as f64 * cfg.rhythm + 3600.0;
        let schedule = build_schedule(cfg, net, span)?;
        let longest = net.streets.iter().map(|s| {
            let last = *s.links.last().unwrap();
            net.links[last].offset + net.links[last].length
        });
        let longest = longest.fold(0.0, f64::max) / cfg.speed;
        let warmup = libm::ceil(longest / ARRIVAL_WINDOW) * ARRIVAL_WINDOW;
        Ok(Self {
            net,
            cfg: cfg.clone(),
            scn: scn.clone(),
            sim: *sim,
            sp: ShortestPaths::new(net),
            schedule,
            reservations: ReservationTable::new(net, cfg),
            queues: vec![VecDeque::new(); rates.len()],
            starved: vec![0; rates.len()],
            rates,
            routes: HashMap::new(),
            path_rng: substream(sim.seed, "path_ties", 0),
            records: Vec::new(),
            next_window: 0,
            warmup,
            interval: 0,
            solve_ms: Vec::new(),
            max_queue: 0,
            stats: Vec::new(),
            last: None,
        })
    }

    pub fn rates(&self) -> &[OdRate] {
        &self.rates
    }

    pub fn interval(&self) -> i64 {
        self.interval
    }

    pub fn time(&self) -> f64 {
        self.interval as f64 * self.cfg.rhythm
    }

    pub fn generated(&self) -> u64 {
        self.records.len() as u64
    }

    pub fn queued(&self) -> u64 {
        self.queues.iter().map(|q| q.len() as u64).sum()
    }

    /// Admitted vehicles that have not reached their destination at `t`.
    pub fn in_flight(&self, t: f64) -> u64 {
        self.records.iter().filter(|r| r.exit.map_or(false, |x| x > t)).count() as u64
    }

    pub fn arrived(&self, t: f64) -> u64 {
        self.records.iter().filter(|r| r.exit.map_or(false, |x| x <= t)).count() as u64
    }

    pub fn records(&self) -> &[VehicleRecord] {
        &self.records
    }

    pub fn reservations(&self) -> &ReservationTable {
        &self.reservations
    }

    pub fn schedule(&self) -> &EntrySchedule {
        &self.schedule
    }

    /// Arrivals start once the first platoons have crossed every street, so
    /// every origin sees steady-state platoons.
    pub fn warmup(&self) -> f64 {
        self.warmup
    }

    fn enqueue_until(&mut self, t_end: f64) {
        let t_end = (t_end - self.warmup).min(self.sim.horizon);
        while (self.next_window as f64) * ARRIVAL_WINDOW < t_end {
            let k = self.next_window;
            for mut a in generate_arrivals(&self.rates, &self.scn, k, ARRIVAL_WINDOW, self.sim.seed) {
                if a.time >= self.sim.horizon {
                    continue;
                }
                a.time += self.warmup;
                let od = self.rates[a.od].od;
                let id = self.records.len() as u64;
                let shortest = self.sp.distance(od.origin, od.destination);
                self.records.push(VehicleRecord {
                    id,
                    od,
                    appear: a.time,
                    entry: None,
                    exit: None,
                    length: 0.0,
                    shortest,
                    delay: 0.0,
                });
                self.queues[a.od].push_back(id);
            }
            self.next_window += 1;
        }
    }

    fn candidate_paths(&mut self, k: usize, e: i64) -> Result<Vec<TimedPath>, Error> {
        let od = self.rates[k].od;
        let v = self.cfg.speed;
        let shortest = self.sp.distance(od.origin, od.destination);
        let routes: Vec<Route> = match self.sim.router {
            RouterKind::Spr => vec![self.sp.sample(self.net, od, &mut self.path_rng)?],
            RouterKind::Mpr => {
                if !self.routes.contains_key(&k) {
                    let mut rs = self.sp.within_budget(self.net, od, self.sim.detour_budget * v, self.sim.max_routes);
                    rs.sort_by(|a, b| a.length.total_cmp(&b.length).then(a.pieces.cmp(&b.pieces)));
                    self.routes.insert(k, rs);
                }
                self.routes[&k].clone()
            }
        };
        routes
            .iter()
            .map(|r| {
                let mut p = compute_incidence(self.net, &self.cfg, &self.schedule, od, &r.links(self.net), e)?;
                p.cost = ((r.length - shortest) / v).max(0.0);
                Ok(p)
            })
            .collect()
    }

    /// Epoch at which the platoon of interval `e` passes the origin of OD
    /// `k`, if one does.
    fn passage(&self, k: usize, e: i64) -> Option<f64> {
        let o = self.rates[k].od.origin;
        let street = self.net.street_of(o)?;
        let pos = self.net.street_position(o)?;
        let axis = self.net.streets[street].axis;
        let t = next_platoon(&self.cfg, axis, pos, e as f64 * self.cfg.rhythm) + pos / self.cfg.speed;
        (interval_of(t, self.cfg.rhythm) == e).then_some(t)
    }

    /// Runs one routing interval and advances the clock.
    pub fn step(&mut self, clock: &dyn Clock) -> Result<IntervalStats, Error> {
        let e = self.interval;
        let t_hat = self.cfg.rhythm;
        self.enqueue_until((e + 1) as f64 * t_hat);
        let queued = self.queued();
        self.max_queue = self.max_queue.max(queued);
        let mut odq = Vec::new();
        let mut active = Vec::new();
        for k in 0..self.queues.len() {
            if self.queues[k].is_empty() {
                continue;
            }
            let Some(start) = self.passage(k, e) else { continue };
            let eligible = self.queues[k].iter().take_while(|&&id| self.records[id as usize].appear <= start).count();
            if eligible == 0 {
                continue;
            }
            let paths = self.candidate_paths(k, e)?;
            odq.push(OdQueue { od: self.rates[k].od, demand: eligible as u32, penalty: penalty(self.starved[k], t_hat), paths });
            active.push((k, eligible));
        }
        let eligible_total: u64 = active.iter().map(|a| a.1 as u64).sum();
        let inst = match self.sim.router {
            RouterKind::Spr => build_spr(e, odq, &self.reservations),
            RouterKind::Mpr => build_mpr(e, odq, &self.reservations, self.sim.detour_budget),
        };
        let mut stats = IntervalStats {
            interval: e,
            queued,
            eligible: eligible_total,
            admitted: 0,
            columns: inst.paths.len(),
            rows: inst.rows.len(),
            gap: 0.0,
            solve_ms: 0.0,
        };
        let mut taken = vec![0usize; active.len()];
        if !inst.paths.is_empty() {
            let t0 = clock.now_ms();
            let r = solve_rounding(&inst, self.sim.lp.unwrap_or_default(), INTEGRALITY_TOL)?;
            stats.solve_ms = clock.now_ms() - t0;
            stats.gap = r.gap;
            self.solve_ms.push(stats.solve_ms);
            commit_reservations(&inst, &r.flows, &mut self.reservations)?;
            let v = self.cfg.speed;
            // Commodities keep the order of `active`; admit FIFO per OD.
            for ((c, &(k, _)), got) in inst.commodities.iter().zip(&active).zip(taken.iter_mut()) {
                for &pi in &c.paths {
                    let p = &inst.paths[pi];
                    for _ in 0..r.flows[pi] {
                        let id = self.queues[k].pop_front().ok_or(Error::Rounding("admitted more than queued".into()))?;
                        let rec = &mut self.records[id as usize];
                        rec.entry = Some(p.start);
                        rec.exit = Some(p.arrival);
                        rec.length = p.length;
                        rec.delay = (p.start - rec.appear) + (p.length - rec.shortest) / v;
                        stats.admitted += 1;
                        *got += 1;
                    }
                }
            }
        }
        for (&(k, eligible), &got) in active.iter().zip(&taken) {
            self.starved[k] = if got < eligible { self.starved[k] + 1 } else { 0 };
        }
        self.reservations.prune_before(e);
        self.interval += 1;
        self.stats.push(stats);
        self.last = Some(inst);
        Ok(stats)
    }

    /// Program solved by the latest `step`.
    pub fn last_instance(&self) -> Option<&RoutingInstance> {
        self.last.as_ref()
    }

    /// Whether the rollout has nothing left to do.
    pub fn done(&self) -> bool {
        let t = self.time() - self.warmup;
        (t >= self.sim.horizon && self.queued() == 0) || t >= self.sim.horizon + self.sim.drain
    }

    pub fn finish(mut self) -> SimOutput {
        let end = self.time();
        for r in self.records.iter_mut().filter(|r| r.entry.is_none()) {
            r.delay = (end - r.appear).max(0.0);
        }
        SimOutput {
            report: report(&self.records, self.warmup + self.sim.horizon, &self.solve_ms, self.max_queue),
            records: self.records,
            intervals: self.stats,
        }
    }
}

/// Runs a rollout to completion.
pub fn run(
    net: &GridNetwork,
    cfg: &RhythmConfig,
    scn: &DemandScenario,
    sim: &SimConfig,
    clock: &dyn Clock,
) -> Result<SimOutput, Error> {
    let mut s = Simulation::new(net, cfg, scn, sim)?;
    while !s.done() {
        s.step(clock)?;
    }
    Ok(s.finish())
}
