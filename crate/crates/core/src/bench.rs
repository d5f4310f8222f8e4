//! Benchmark controls on the same grid, simulated as link-level point
//! queues with finite storage: max-pressure signals with fixed shortest
//! routes (MP-1) or adaptive routing (MP-R), and first-come-first-served
//! reservations with adaptive routing (FCFS-R).

use alloc::collections::{BinaryHeap, VecDeque};
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::{Ordering, Reverse};

use serde::{Deserialize, Serialize};

use crate::demand::{generate_arrivals, od_rates, DemandScenario, OdRate};
use crate::error::Error;
use crate::grid::{Axis, GridNetwork, LinkId, NodeId, NodeKind, OdPair, ShortestPaths};
use crate::rng::substream;
use crate::sim::{report, SimOutput, VehicleRecord, ARRIVAL_WINDOW};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Controller {
    /// Max-pressure signals, fixed shortest routes.
    Mp1,
    /// Max-pressure signals, adaptive routing at every diverge.
    MpR,
    /// First-come-first-served reservations, adaptive routing.
    FcfsR,
}

impl Controller {
    pub fn adaptive(self) -> bool {
        !matches!(self, Controller::Mp1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub controller: Controller,
    pub horizon: f64,
    pub drain: f64,
    /// Max-pressure slot length, seconds.
    pub slot: f64,
    /// Saturation flow per lane, vehicles per second.
    pub saturation: f64,
    /// Time a crossing blocks the perpendicular direction under FCFS, s.
    pub occupancy: f64,
    /// Storage per lane-meter is `1 / jam_spacing`; `None` is unbounded.
    pub jam_spacing: Option<f64>,
    pub speed: f64,
    /// Simulation step, seconds; events inside a step keep exact times.
    pub tick: f64,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            controller: Controller::Mp1,
            horizon: 1800.0,
            drain: 1800.0,
            slot: 5.0,
            saturation: 2.0,
            occupancy: 1.0,
            jam_spacing: Some(7.5),
            speed: 15.0,
            tick: 1.0,
            seed: 1,
        }
    }
}

/// Movement from an incoming to an outgoing link, with the number of
/// vehicles waiting for it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MovementQueue {
    pub from: LinkId,
    pub to: LinkId,
    pub waiting: u32,
    /// Vehicles waiting at the stop line of `to`.
    pub downstream: u32,
}

/// Phase index maximizing total pressure; phase 0 serves the horizontal
/// approach, phase 1 the vertical one. Ties go to the lower index.
pub fn mp_phase_select(phases: &[Vec<MovementQueue>]) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, ms) in phases.iter().enumerate() {
        let p: f64 = ms.iter().map(|m| m.waiting as f64 - m.downstream as f64).sum();
        if p > best.1 {
            best = (i, p);
        }
    }
    best.0
}

/// Earliest crossing epochs for requests `(ready, axis)` processed in the
/// given order: same-axis crossings are `headway` apart, switching axis
/// costs `occupancy`, and no request passes an earlier one.
pub fn fcfs_reserve(requests: &[(f64, Axis)], headway: f64, occupancy: f64) -> Vec<f64> {
    let mut last: Option<(f64, Axis)> = None;
    requests
        .iter()
        .map(|&(ready, axis)| {
            let t = match last {
                None => ready,
                Some((lt, la)) => ready.max(lt + if la == axis { headway } else { occupancy }),
            };
            last = Some((t, axis));
            t
        })
        .collect()
}

#[derive(Clone, Copy, PartialEq)]
struct Key(f64, NodeId);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

/// Estimated time from every node to `dest` given per-link costs.
pub fn time_to(net: &GridNetwork, link_cost: &[f64], speed: f64, dest: NodeId) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; net.nodes.len()];
    let mut heap = BinaryHeap::new();
    match net.nodes[dest].kind {
        NodeKind::Junction { link, slot, .. } => {
            let from = net.links[link].from;
            let along = net.links[link].junctions[slot].1 / speed;
            dist[from] = along;
            heap.push(Reverse(Key(along, from)));
        }
        _ => {
            dist[dest] = 0.0;
            heap.push(Reverse(Key(0.0, dest)));
        }
    }
    while let Some(Reverse(Key(d, u))) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for (l, link) in net.links.iter().enumerate() {
            if link.to == u {
                let nd = d + link_cost[l];
                if nd < dist[link.from] {
                    dist[link.from] = nd;
                    heap.push(Reverse(Key(nd, link.from)));
                }
            }
        }
    }
    dist
}

/// Outgoing link at a diverge minimizing estimated time to `dest`; ties go
/// to the lower link id.
pub fn adaptive_route(net: &GridNetwork, at: NodeId, link_cost: &[f64], to_dest: &[f64], speed: f64, dest: NodeId) -> Option<LinkId> {
    let mut best: Option<(f64, LinkId)> = None;
    for (l, link) in net.links.iter().enumerate().filter(|(_, k)| k.from == at) {
        let c = match net.nodes[dest].kind {
            NodeKind::Junction { link: dl, slot, .. } if dl == l => net.links[l].junctions[slot].1 / speed,
            _ => link_cost[l] + to_dest[link.to],
        };
        if c.is_finite() && best.map_or(true, |(b, _)| c < b) {
            best = Some((c, l));
        }
    }
    best.map(|b| b.1)
}

#[derive(Clone, Debug)]
struct Vehicle {
    od: OdPair,
    appear: f64,
    entry: Option<f64>,
    exit: Option<f64>,
    length: f64,
    shortest: f64,
    /// Fixed route for non-adaptive control.
    route: Vec<LinkId>,
    hop: usize,
    next: Option<LinkId>,
}

struct LinkState {
    /// `(ready, vehicle)` in arrival order at the stop line.
    queue: VecDeque<(f64, usize)>,
    /// Vehicles counted against storage.
    count: u32,
    storage: u32,
}

/// Where a vehicle stops on a link: its destination's distance from the
/// link start, if the destination lies on it.
fn stop_on(net: &GridNetwork, link: LinkId, dest: NodeId) -> Option<f64> {
    let l = &net.links[link];
    if l.to == dest {
        return Some(l.length);
    }
    match net.nodes[dest].kind {
        NodeKind::Junction { link: dl, slot, .. } if dl == link => Some(l.junctions[slot].1),
        _ => None,
    }
}

/// Link a vehicle starts on and its distance along that link.
fn first_link(net: &GridNetwork, origin: NodeId) -> Option<(LinkId, f64)> {
    match net.nodes[origin].kind {
        NodeKind::Entrance { street } => Some((net.streets[street].links[0], 0.0)),
        NodeKind::Junction { link, slot, .. } => Some((link, net.links[link].junctions[slot].1)),
        _ => None,
    }
}

pub struct Benchmark<'a> {
    net: &'a GridNetwork,
    cfg: BenchConfig,
    scn: DemandScenario,
    rates: Vec<OdRate>,
    sp: ShortestPaths,
    vehicles: Vec<Vehicle>,
    links: Vec<LinkState>,
    origin_queue: Vec<VecDeque<usize>>,
    origin_last: Vec<f64>,
    last_cross: Vec<Option<(f64, Axis)>>,
    phase: Vec<usize>,
    link_cost: Vec<f64>,
    to_dest: Vec<Option<Vec<f64>>>,
    next_window: u64,
    time: f64,
    max_queue: u64,
    path_rng: rand_chacha::ChaCha8Rng,
}

impl<'a> Benchmark<'a> {
    pub fn new(net: &'a GridNetwork, scn: &DemandScenario, cfg: &BenchConfig) -> Result<Self, Error> {
        let rates = od_rates(net, scn)?;
        if !(cfg.tick > 0.0) || !(cfg.slot > 0.0) || !(cfg.saturation > 0.0) || !(cfg.speed > 0.0) {
            return Err(Error::InvalidScenario("benchmark step, slot, saturation and speed must be positive".into()));
        }
        let links = net
            .links
            .iter()
            .map(|l| LinkState {
                queue: VecDeque::new(),
                count: 0,
                storage: cfg.jam_spacing.map_or(u32::MAX, |j| ((l.length * l.lanes as f64 / j) as u32).max(1)),
            })
            .collect();
        Ok(Self {
            net,
            cfg: *cfg,
            scn: scn.clone(),
            rates,
            sp: ShortestPaths::new(net),
            vehicles: Vec::new(),
            links,
            origin_queue: vec![VecDeque::new(); net.nodes.len()],
            origin_last: vec![f64::NEG_INFINITY; net.nodes.len()],
            last_cross: vec![None; net.nodes.len()],
            phase: vec![0; net.nodes.len()],
            link_cost: net.links.iter().map(|l| l.length / cfg.speed).collect(),
            to_dest: vec![None; net.nodes.len()],
            next_window: 0,
            time: 0.0,
            max_queue: 0,
            path_rng: substream(cfg.seed, "path_ties", 0),
        })
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    fn headway(&self, link: LinkId) -> f64 {
        1.0 / (self.cfg.saturation * self.net.links[link].lanes as f64)
    }

    fn generate(&mut self, t_end: f64) -> Result<(), Error> {
        while (self.next_window as f64) * ARRIVAL_WINDOW < t_end.min(self.cfg.horizon) {
            for a in generate_arrivals(&self.rates, &self.scn, self.next_window, ARRIVAL_WINDOW, self.cfg.seed) {
                if a.time >= self.cfg.horizon {
                    continue;
                }
                let od = self.rates[a.od].od;
                let route = if self.cfg.controller.adaptive() {
                    Vec::new()
                } else {
                    self.sp.sample(self.net, od, &mut self.path_rng)?.links(self.net)
                };
                let id = self.vehicles.len();
                self.vehicles.push(Vehicle {
                    od,
                    appear: a.time,
                    entry: None,
                    exit: None,
                    length: 0.0,
                    shortest: self.sp.distance(od.origin, od.destination),
                    route,
                    hop: 0,
                    next: None,
                });
                self.origin_queue[od.origin].push_back(id);
            }
            self.next_window += 1;
        }
        Ok(())
    }

    fn refresh_estimates(&mut self) {
        let v = self.cfg.speed;
        for (l, link) in self.net.links.iter().enumerate() {
            let waiting = self.links[l].queue.iter().take_while(|(r, _)| *r <= self.time).count() as f64;
            self.link_cost[l] = link.length / v + waiting * self.headway(l);
        }
        self.to_dest.iter_mut().for_each(|d| *d = None);
    }

    fn decide(&mut self, vid: usize, at: NodeId) -> Option<LinkId> {
        let veh = &self.vehicles[vid];
        if !self.cfg.controller.adaptive() {
            return veh.route.get(veh.hop + 1).copied();
        }
        let dest = veh.od.destination;
        if self.to_dest[dest].is_none() {
            self.to_dest[dest] = Some(time_to(self.net, &self.link_cost, self.cfg.speed, dest));
        }
        adaptive_route(self.net, at, &self.link_cost, self.to_dest[dest].as_ref().unwrap(), self.cfg.speed, dest)
    }

    /// Puts a vehicle on `link` at time `t`, starting `from` meters along it.
    fn enter(&mut self, vid: usize, link: LinkId, from: f64, t: f64) {
        let v = self.cfg.speed;
        let dest = self.vehicles[vid].od.destination;
        let veh = &mut self.vehicles[vid];
        veh.next = None;
        match stop_on(self.net, link, dest).filter(|&s| s > from) {
            Some(stop) => {
                veh.length += stop - from;
                veh.exit = Some(t + (stop - from) / v);
            }
            None => {
                let len = self.net.links[link].length;
                veh.length += len - from;
                let ready = t + (len - from) / v;
                let q = &mut self.links[link].queue;
                let pos = q.partition_point(|&(r, _)| r <= ready);
                q.insert(pos, (ready, vid));
                self.links[link].count += 1;
            }
        }
    }

    fn admit_origins(&mut self, t_end: f64) {
        for o in 0..self.origin_queue.len() {
            while let Some(&vid) = self.origin_queue[o].front() {
                let Some((link, from)) = first_link(self.net, o) else {
                    self.origin_queue[o].pop_front();
                    continue;
                };
                let t = self.vehicles[vid].appear.max(self.time).max(self.origin_last[o] + self.headway(link));
                if t >= t_end || self.links[link].count >= self.links[link].storage {
                    break;
                }
                self.origin_queue[o].pop_front();
                self.origin_last[o] = t;
                self.vehicles[vid].entry = Some(t);
                self.enter(vid, link, from, t);
            }
        }
    }

    /// Incoming links of a crossroads ordered horizontal, vertical.
    fn approaches(&self, node: NodeId) -> Vec<LinkId> {
        let mut ins: Vec<LinkId> = (0..self.net.links.len()).filter(|&l| self.net.links[l].to == node).collect();
        ins.sort_by_key(|&l| (self.net.streets[self.net.links[l].street].axis != Axis::Horizontal, l));
        ins
    }

    fn head(&mut self, link: LinkId, t_end: f64) -> Option<(f64, usize, LinkId)> {
        let &(ready, vid) = self.links[link].queue.front()?;
        if ready >= t_end {
            return None;
        }
        let next = match self.vehicles[vid].next {
            Some(n) => n,
            None => {
                let n = self.decide(vid, self.net.links[link].to)?;
                self.vehicles[vid].next = Some(n);
                n
            }
        };
        Some((ready, vid, next))
    }

    fn cross(&mut self, link: LinkId, vid: usize, next: LinkId, t: f64) {
        self.links[link].queue.pop_front();
        self.links[link].count -= 1;
        self.vehicles[vid].hop += 1;
        self.enter(vid, next, 0.0, t);
    }

    fn has_room(&self, link: LinkId) -> bool {
        self.links[link].count < self.links[link].storage
    }

    fn serve_mp(&mut self, node: NodeId, ins: &[LinkId], t_end: f64) {
        let slot_start = libm::floor(self.time / self.cfg.slot + 1e-9) * self.cfg.slot;
        if libm::fabs(self.time - slot_start) < 1e-9 {
            let mut phases = Vec::new();
            for &l in ins {
                let ready: Vec<(usize, Option<LinkId>)> = self.links[l]
                    .queue
                    .iter()
                    .take_while(|(r, _)| *r <= self.time)
                    .map(|&(_, v)| (v, self.vehicles[v].next))
                    .collect();
                let mut ms: Vec<MovementQueue> = Vec::new();
                for (v, n) in ready {
                    let n = match n {
                        Some(n) => n,
                        None => match self.decide(v, node) {
                            Some(n) => {
                                self.vehicles[v].next = Some(n);
                                n
                            }
                            None => continue,
                        },
                    };
                    match ms.iter_mut().find(|m| m.to == n) {
                        Some(m) => m.waiting += 1,
                        None => {
                            let downstream = self.links[n].queue.iter().take_while(|(r, _)| *r <= self.time).count() as u32;
                            ms.push(MovementQueue { from: l, to: n, waiting: 1, downstream })
                        }
                    }
                }
                phases.push(ms);
            }
            self.phase[node] = mp_phase_select(&phases);
        }
        let Some(&green) = ins.get(self.phase[node]) else { return };
        let h = self.headway(green);
        while let Some((ready, vid, next)) = self.head(green, t_end) {
            let t = match self.last_cross[node] {
                Some((lt, _)) => ready.max(lt + h),
                None => ready,
            }
            .max(self.time);
            if t >= t_end || !self.has_room(next) {
                break;
            }
            self.last_cross[node] = Some((t, self.net.streets[self.net.links[green].street].axis));
            self.cross(green, vid, next, t);
        }
    }

    fn serve_fcfs(&mut self, node: NodeId, ins: &[LinkId], t_end: f64) {
        loop {
            let mut pick: Option<(f64, usize, LinkId, LinkId)> = None;
            for &l in ins {
                if let Some((ready, vid, next)) = self.head(l, t_end) {
                    if pick.map_or(true, |p| ready < p.0) {
                        pick = Some((ready, vid, next, l));
                    }
                }
            }
            let Some((ready, vid, next, link)) = pick else { return };
            let axis = self.net.streets[self.net.links[link].street].axis;
            let t = fcfs_reserve(
                &[self.last_cross[node].unwrap_or((f64::NEG_INFINITY, axis)), (ready, axis)],
                self.headway(link),
                self.cfg.occupancy,
            )[1]
            .max(self.time);
            // The earliest request holds the crossroads until it can go.
            if t >= t_end || !self.has_room(next) {
                return;
            }
            self.last_cross[node] = Some((t, axis));
            self.cross(link, vid, next, t);
        }
    }

    /// Advances one step.
    pub fn step(&mut self) -> Result<(), Error> {
        let t_end = self.time + self.cfg.tick;
        self.generate(t_end)?;
        let slot_start = libm::fabs(self.time / self.cfg.slot - libm::round(self.time / self.cfg.slot)) < 1e-9;
        if self.cfg.controller.adaptive() && slot_start {
            self.refresh_estimates();
        }
        self.admit_origins(t_end);
        // Departure links end at exits and never hold vehicles.
        for node in 0..self.net.nodes.len() {
            if !matches!(self.net.nodes[node].kind, NodeKind::Crossroads { .. }) {
                continue;
            }
            let ins = self.approaches(node);
            match self.cfg.controller {
                Controller::Mp1 | Controller::MpR => self.serve_mp(node, &ins, t_end),
                Controller::FcfsR => self.serve_fcfs(node, &ins, t_end),
            }
        }
        let waiting: u64 = self.origin_queue.iter().map(|q| q.len() as u64).sum();
        self.max_queue = self.max_queue.max(waiting);
        self.time = t_end;
        Ok(())
    }

    pub fn in_network(&self) -> u64 {
        self.links.iter().map(|l| l.count as u64).sum()
    }

    /// `(vehicles, storage)` per link.
    pub fn loads(&self) -> Vec<(u32, u32)> {
        self.links.iter().map(|l| (l.count, l.storage)).collect()
    }

    /// Vehicles whose exit time is already fixed.
    pub fn committed(&self) -> u64 {
        self.vehicles.iter().filter(|v| v.exit.is_some()).count() as u64
    }

    pub fn waiting(&self) -> u64 {
        self.origin_queue.iter().map(|q| q.len() as u64).sum()
    }

    pub fn generated(&self) -> u64 {
        self.vehicles.len() as u64
    }

    pub fn finished(&self, t: f64) -> u64 {
        self.vehicles.iter().filter(|v| v.exit.map_or(false, |x| x <= t)).count() as u64
    }

    pub fn done(&self) -> bool {
        let all_out = self.time >= self.cfg.horizon && self.vehicles.iter().all(|v| v.exit.is_some());
        all_out || self.time >= self.cfg.horizon + self.cfg.drain
    }

    /// Trip records; unfinished trips are charged up to the current time.
    pub fn finish(self) -> SimOutput {
        let end = self.time;
        let v = self.cfg.speed;
        let records: Vec<VehicleRecord> = self
            .vehicles
            .iter()
            .enumerate()
            .map(|(id, x)| {
                let exit = x.exit.filter(|&e| e <= end);
                let done_at = exit.unwrap_or(end);
                VehicleRecord {
                    id: id as u64,
                    od: x.od,
                    appear: x.appear,
                    entry: x.entry,
                    exit,
                    length: x.length,
                    shortest: x.shortest,
                    delay: (done_at - x.appear - x.shortest / v).max(0.0),
                }
            })
            .collect();
        SimOutput { report: report(&records, self.cfg.horizon, &[], self.max_queue), records, intervals: Vec::new() }
    }
}

/// Runs a benchmark controller on the arrival stream of `scn` and `seed`.
pub fn run_benchmark(net: &GridNetwork, scn: &DemandScenario, cfg: &BenchConfig) -> Result<SimOutput, Error> {
    let mut b = Benchmark::new(net, scn, cfg)?;
    while !b.done() {
        b.step()?;
    }
    Ok(b.finish())
}
