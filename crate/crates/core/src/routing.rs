//! Per-interval routing programs: timed paths and their temporal-link
//! incidence, SPR and MPR instances, LP rounding and platoon reservations.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use hashbrown::HashMap;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::grid::{Axis, GridNetwork, LinkId, OdPair};
use crate::lp::{LinearProgram, LpOptions, Sense, Simplex, Status};
use crate::rhythm::{EntrySchedule, RhythmConfig};

const EPS: f64 = 1e-9;

/// Integrality tolerance used by the rounding loop.
pub const INTEGRALITY_TOL: f64 = 1e-6;

/// One virtual platoon on one link: `(link, interval)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TemporalLink {
    pub link: LinkId,
    pub interval: i64,
}

/// A route pinned to concrete platoons.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimedPath {
    pub od: OdPair,
    pub links: Vec<LinkId>,
    /// Epoch at which the platoon passes the origin.
    pub start: f64,
    /// Epoch at which the vehicle reaches the destination.
    pub arrival: f64,
    /// Temporal links in traversal order.
    pub temporal: Vec<TemporalLink>,
    /// Travelled distance in meters.
    pub length: f64,
    /// Detour time over the OD's shortest route, seconds.
    pub cost: f64,
}

impl TimedPath {
    pub fn start_interval(&self, rhythm: f64) -> i64 {
        interval_of(self.start, rhythm)
    }
}

pub fn interval_of(t: f64, rhythm: f64) -> i64 {
    libm::floor(t / rhythm + EPS) as i64
}

/// First platoon of an axis passing position `pos` no earlier than `t`;
/// returns its entry epoch.
pub fn next_platoon(cfg: &RhythmConfig, axis: Axis, pos: f64, t: f64) -> f64 {
    let phase = cfg.entry_phase(axis);
    let k = libm::ceil((t - pos / cfg.speed) / cfg.rhythm - phase - EPS).max(0.0);
    (k + phase) * cfg.rhythm
}

fn scheduled(schedule: &EntrySchedule, street: usize, epoch: f64) -> bool {
    let e = &schedule.epochs[street];
    let i = e.partition_point(|&x| x < epoch - 1e-7);
    i < e.len() && libm::fabs(e[i] - epoch) <= 1e-7
}

/// Pins `links` (from `od.origin` to `od.destination`) to the platoon passing
/// the origin during interval `interval`, turning into the first
/// perpendicular platoon that reaches each turn crossroads.
pub fn compute_incidence(
    net: &GridNetwork,
    cfg: &RhythmConfig,
    schedule: &EntrySchedule,
    od: OdPair,
    links: &[LinkId],
    interval: i64,
) -> Result<TimedPath, Error> {
    let (first, last) = match (links.first(), links.last()) {
        (Some(&f), Some(&l)) => (f, l),
        _ => return Err(Error::EmptyPath),
    };
    let v = cfg.speed;
    let t_hat = cfg.rhythm;
    let pos_o = net
        .street_position(od.origin)
        .ok_or_else(|| Error::Unaligned(format!("origin {} is not on a street", od.origin)))?;
    let pos_d = net
        .street_position(od.destination)
        .ok_or_else(|| Error::Unaligned(format!("destination {} is not on a street", od.destination)))?;
    let mut street = net.links[first].street;
    let axis = net.streets[street].axis;
    let mut epoch = next_platoon(cfg, axis, pos_o, interval as f64 * t_hat);
    let start = epoch + pos_o / v;
    if interval_of(start, t_hat) != interval || !scheduled(schedule, street, epoch) {
        return Err(Error::Unaligned(format!("no platoon passes node {} in interval {interval}", od.origin)));
    }
    let mut temporal = Vec::with_capacity(links.len());
    let mut prev: Option<LinkId> = None;
    for &a in links {
        let link = &net.links[a];
        if let Some(p) = prev {
            let pl = &net.links[p];
            if pl.to != link.from {
                return Err(Error::InvalidNetwork(format!("links {p} and {a} are not consecutive")));
            }
            if link.street != street {
                let at_turn = epoch + (pl.offset + pl.length) / v;
                street = link.street;
                epoch = next_platoon(cfg, net.streets[street].axis, link.offset, at_turn);
                if !scheduled(schedule, street, epoch) {
                    return Err(Error::Unaligned(format!("no platoon on street {street} after {at_turn}")));
                }
            }
        }
        temporal.push(TemporalLink { link: a, interval: interval_of(epoch + link.offset / v, t_hat) });
        prev = Some(a);
    }
    let (fl, ll) = (&net.links[first], &net.links[last]);
    let total: f64 = links.iter().map(|&a| net.links[a].length).sum();
    let length = total - (pos_o - fl.offset) - (ll.offset + ll.length - pos_d);
    Ok(TimedPath { od, links: links.to_vec(), start, arrival: epoch + pos_d / v, temporal, length, cost: 0.0 })
}

/// Remaining platoon capacities, indexed by temporal link.
#[derive(Clone, Debug, PartialEq)]
pub struct ReservationTable {
    capacity: Vec<u32>,
    used: HashMap<TemporalLink, u32>,
}

impl ReservationTable {
    /// Every temporal link starts with its axis's crossroads capacity.
    pub fn new(net: &GridNetwork, cfg: &RhythmConfig) -> Self {
        let capacity = net
            .links
            .iter()
            .map(|l| cfg.crossroads_capacity_for(net.streets[l.street].axis, l.lanes))
            .collect();
        Self { capacity, used: HashMap::new() }
    }

    pub fn uniform(links: usize, capacity: u32) -> Self {
        Self { capacity: vec![capacity; links], used: HashMap::new() }
    }

    pub fn capacity(&self, link: LinkId) -> u32 {
        self.capacity[link]
    }

    pub fn used(&self, t: TemporalLink) -> u32 {
        self.used.get(&t).copied().unwrap_or(0)
    }

    pub fn remaining(&self, t: TemporalLink) -> u32 {
        self.capacity[t.link] - self.used(t)
    }

    /// Pre-books `n` slots, e.g. for vehicles admitted outside the routing
    /// program.
    pub fn reserve(&mut self, t: TemporalLink, n: u32) -> Result<(), Error> {
        if self.remaining(t) < n {
            return Err(Error::OverCommit { link: t.link, interval: t.interval });
        }
        if n > 0 {
            *self.used.entry(t).or_insert(0) += n;
        }
        Ok(())
    }

    /// Forgets platoons that entered their link before `interval`.
    pub fn prune_before(&mut self, interval: i64) {
        self.used.retain(|t, _| t.interval >= interval);
    }

    pub fn len(&self) -> usize {
        self.used.len()
    }

    pub fn is_empty(&self) -> bool {
        self.used.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (TemporalLink, u32)> + '_ {
        self.used.iter().map(|(t, n)| (*t, *n))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RouterKind {
    Spr,
    Mpr,
}

/// Queued demand of one OD in one interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Commodity {
    pub od: OdPair,
    pub demand: u32,
    pub penalty: f64,
    /// Indices into `RoutingInstance::paths`.
    pub paths: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapacityRow {
    pub temporal: TemporalLink,
    pub capacity: u32,
}

/// One interval's SPR or MPR program; also the instance dump format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoutingInstance {
    pub kind: RouterKind,
    pub interval: i64,
    pub paths: Vec<TimedPath>,
    pub commodities: Vec<Commodity>,
    /// Binding capacity rows.
    pub rows: Vec<CapacityRow>,
    /// Detour budget over the shortest route, seconds (MPR only).
    pub detour_limit: Option<f64>,
}

impl RoutingInstance {
    pub fn empty(kind: RouterKind, interval: i64) -> Self {
        Self { kind, interval, paths: Vec::new(), commodities: Vec::new(), rows: Vec::new(), detour_limit: None }
    }

    /// Capacity block of the incidence matrix: rows × paths, entries count
    /// how often a path rides the row's platoon.
    pub fn incidence(&self) -> Vec<Vec<u8>> {
        let index: HashMap<TemporalLink, usize> =
            self.rows.iter().enumerate().map(|(i, r)| (r.temporal, i)).collect();
        let mut c = vec![vec![0u8; self.paths.len()]; self.rows.len()];
        for (j, p) in self.paths.iter().enumerate() {
            for t in &p.temporal {
                if let Some(&i) = index.get(t) {
                    c[i][j] += 1;
                }
            }
        }
        c
    }

    pub fn total_demand(&self) -> u64 {
        self.commodities.iter().map(|c| c.demand as u64).sum()
    }

    /// LP relaxation. Path variables come first, in path order; MPR appends
    /// one slack per commodity. Returns the program and its objective offset.
    pub fn relaxation(&self) -> (LinearProgram, f64) {
        let mut lp = LinearProgram::new();
        let mut bound = vec![0.0; self.paths.len()];
        for c in &self.commodities {
            for &p in &c.paths {
                bound[p] = c.demand as f64;
            }
        }
        let mut offset = 0.0;
        match self.kind {
            RouterKind::Spr => {
                let mut cost = vec![0.0; self.paths.len()];
                for c in &self.commodities {
                    for &p in &c.paths {
                        cost[p] = -c.penalty;
                    }
                    offset += c.demand as f64 * c.penalty;
                }
                for (p, &u) in bound.iter().enumerate() {
                    lp.add_var(cost[p], 0.0, u);
                }
            }
            RouterKind::Mpr => {
                for (p, &u) in bound.iter().enumerate() {
                    lp.add_var(self.paths[p].cost, 0.0, u);
                }
                for c in &self.commodities {
                    let s = lp.add_var(c.penalty, 0.0, c.demand as f64);
                    let mut row: Vec<(usize, f64)> = c.paths.iter().map(|&p| (p, 1.0)).collect();
                    row.push((s, 1.0));
                    lp.add_row(row, Sense::Eq, c.demand as f64);
                }
            }
        }
        for (i, col) in self.incidence().iter().enumerate() {
            let coeffs: Vec<(usize, f64)> =
                col.iter().enumerate().filter(|(_, &v)| v > 0).map(|(j, &v)| (j, v as f64)).collect();
            lp.add_row(coeffs, Sense::Le, self.rows[i].capacity as f64);
        }
        (lp, offset)
    }

    /// Objective of an integer path assignment, in delay seconds.
    pub fn objective(&self, flows: &[u32]) -> f64 {
        let mut total = 0.0;
        for c in &self.commodities {
            let served: u32 = c.paths.iter().map(|&p| flows[p]).sum();
            let waiting = c.demand.saturating_sub(served) as f64;
            total += waiting * c.penalty;
            if self.kind == RouterKind::Mpr {
                total += c.paths.iter().map(|&p| flows[p] as f64 * self.paths[p].cost).sum::<f64>();
            }
        }
        total
    }

    /// Whether an integer assignment respects demands and capacities.
    pub fn is_feasible(&self, flows: &[u32]) -> bool {
        if self.commodities.iter().any(|c| c.paths.iter().map(|&p| flows[p]).sum::<u32>() > c.demand) {
            return false;
        }
        let c = self.incidence();
        c.iter().zip(&self.rows).all(|(row, r)| {
            row.iter().zip(flows).map(|(&a, &f)| a as u32 * f).sum::<u32>() <= r.capacity
        })
    }
}

/// Input for one OD: its demand, penalty and candidate timed paths.
#[derive(Clone, Debug, PartialEq)]
pub struct OdQueue {
    pub od: OdPair,
    pub demand: u32,
    pub penalty: f64,
    pub paths: Vec<TimedPath>,
}

fn assemble(
    kind: RouterKind,
    interval: i64,
    queues: Vec<OdQueue>,
    reservations: &ReservationTable,
    detour_limit: Option<f64>,
) -> RoutingInstance {
    let mut inst = RoutingInstance::empty(kind, interval);
    inst.detour_limit = detour_limit;
    // Most vehicles each commodity could put on a platoon.
    let mut load: HashMap<TemporalLink, u64> = HashMap::new();
    for q in queues.into_iter().filter(|q| q.demand > 0 && !q.paths.is_empty()) {
        let mut reach: HashMap<TemporalLink, u64> = HashMap::new();
        let mut idx = Vec::with_capacity(q.paths.len());
        for p in q.paths {
            let mut local: HashMap<TemporalLink, u64> = HashMap::new();
            for t in &p.temporal {
                *local.entry(*t).or_insert(0) += 1;
            }
            for (t, k) in local {
                let e = reach.entry(t).or_insert(0);
                *e = (*e).max(k);
            }
            idx.push(inst.paths.len());
            inst.paths.push(p);
        }
        for (t, k) in reach {
            *load.entry(t).or_insert(0) += k * q.demand as u64;
        }
        inst.commodities.push(Commodity { od: q.od, demand: q.demand, penalty: q.penalty, paths: idx });
    }
    let mut rows: Vec<CapacityRow> = load
        .into_iter()
        .filter_map(|(t, d)| {
            let cap = reservations.remaining(t);
            (d > cap as u64).then_some(CapacityRow { temporal: t, capacity: cap })
        })
        .collect();
    rows.sort_by_key(|r| r.temporal);
    inst.rows = rows;
    inst
}

/// SPR: one shortest timed path per OD with positive demand.
pub fn build_spr(
    interval: i64,
    queues: Vec<OdQueue>,
    reservations: &ReservationTable,
) -> RoutingInstance {
    let queues = queues
        .into_iter()
        .map(|mut q| {
            q.paths.truncate(1);
            q
        })
        .collect();
    assemble(RouterKind::Spr, interval, queues, reservations, None)
}

/// MPR: every timed path within `detour_limit` seconds of the shortest one.
pub fn build_mpr(
    interval: i64,
    queues: Vec<OdQueue>,
    reservations: &ReservationTable,
    detour_limit: f64,
) -> RoutingInstance {
    let queues = queues
        .into_iter()
        .map(|mut q| {
            q.paths.retain(|p| p.cost <= detour_limit + EPS);
            q
        })
        .collect();
    assemble(RouterKind::Mpr, interval, queues, reservations, Some(detour_limit))
}

/// Integer assignment from LP rounding.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rounding {
    /// Vehicles admitted per path.
    pub flows: Vec<u32>,
    /// Objective of the first relaxation (lower bound).
    pub lower: f64,
    /// Objective of the rounded solution (upper bound).
    pub upper: f64,
    pub gap: f64,
    /// Variable bounds added before the relaxation became integral.
    pub rounds: usize,
    pub first_integral: bool,
    pub lp_iterations: usize,
}

fn most_fractional(x: &[f64], tol: f64) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (j, &v) in x.iter().enumerate() {
        let frac = v - libm::floor(v);
        let dist = frac.min(1.0 - frac);
        if dist > tol && best.map_or(true, |(_, b)| dist > b + 1e-12) {
            best = Some((j, dist));
        }
    }
    best.map(|(j, _)| (j, x[j]))
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// One independent block of the program: its path, commodity and capacity
/// row indices.
struct Block {
    paths: Vec<usize>,
    commodities: Vec<usize>,
    rows: Vec<usize>,
}

impl RoutingInstance {
    /// Row indices touched by each path, with multiplicity.
    fn path_rows(&self) -> Vec<Vec<(usize, f64)>> {
        let index: HashMap<TemporalLink, usize> =
            self.rows.iter().enumerate().map(|(i, r)| (r.temporal, i)).collect();
        self.paths
            .iter()
            .map(|p| {
                let mut out: Vec<(usize, f64)> = Vec::new();
                for t in &p.temporal {
                    if let Some(&i) = index.get(t) {
                        match out.iter_mut().find(|(r, _)| *r == i) {
                            Some(e) => e.1 += 1.0,
                            None => out.push((i, 1.0)),
                        }
                    }
                }
                out
            })
            .collect()
    }

    fn blocks(&self, path_rows: &[Vec<(usize, f64)>]) -> Vec<Block> {
        let np = self.paths.len();
        let mut parent: Vec<usize> = (0..np + self.rows.len()).collect();
        let union = |parent: &mut Vec<usize>, a: usize, b: usize| {
            let (x, y) = (find(parent, a), find(parent, b));
            if x != y {
                parent[x.max(y)] = x.min(y);
            }
        };
        for (p, rows) in path_rows.iter().enumerate() {
            for &(r, _) in rows {
                union(&mut parent, p, np + r);
            }
        }
        if self.kind == RouterKind::Mpr {
            for c in &self.commodities {
                for w in c.paths.windows(2) {
                    union(&mut parent, w[0], w[1]);
                }
            }
        }
        let mut slot: HashMap<usize, usize> = HashMap::new();
        let ids: Vec<usize> = (0..parent.len())
            .map(|x| {
                let root = find(&mut parent, x);
                let next = slot.len();
                *slot.entry(root).or_insert(next)
            })
            .collect();
        let mut blocks: Vec<Block> =
            (0..slot.len()).map(|_| Block { paths: Vec::new(), commodities: Vec::new(), rows: Vec::new() }).collect();
        for p in 0..np {
            blocks[ids[p]].paths.push(p);
        }
        for r in 0..self.rows.len() {
            blocks[ids[np + r]].rows.push(r);
        }
        let path_block = &ids[..np];
        for (i, c) in self.commodities.iter().enumerate() {
            if let Some(&p) = c.paths.first() {
                blocks[path_block[p]].commodities.push(i);
            }
        }
        blocks
    }

    /// Relaxation restricted to one block; path variables follow
    /// `block.paths` order.
    fn block_relaxation(
        &self,
        block: &Block,
        path_rows: &[Vec<(usize, f64)>],
        bound: &[f64],
        spr_penalty: &[f64],
    ) -> (LinearProgram, f64) {
        let mut lp = LinearProgram::new();
        let mut offset = 0.0;
        let mut local: HashMap<usize, usize> = HashMap::new();
        for &p in &block.paths {
            let cost = match self.kind {
                RouterKind::Spr => -spr_penalty[p],
                RouterKind::Mpr => self.paths[p].cost,
            };
            local.insert(p, lp.add_var(cost, 0.0, bound[p]));
        }
        for &ci in &block.commodities {
            let c = &self.commodities[ci];
            match self.kind {
                RouterKind::Spr => offset += c.demand as f64 * c.penalty,
                RouterKind::Mpr => {
                    let s = lp.add_var(c.penalty, 0.0, c.demand as f64);
                    let mut row: Vec<(usize, f64)> = c.paths.iter().map(|p| (local[p], 1.0)).collect();
                    row.push((s, 1.0));
                    lp.add_row(row, Sense::Eq, c.demand as f64);
                }
            }
        }
        let row_local: HashMap<usize, usize> = block.rows.iter().enumerate().map(|(i, &r)| (r, i)).collect();
        let mut coeffs: Vec<Vec<(usize, f64)>> = vec![Vec::new(); block.rows.len()];
        for &p in &block.paths {
            for &(r, a) in &path_rows[p] {
                coeffs[row_local[&r]].push((local[&p], a));
            }
        }
        for (i, c) in coeffs.into_iter().enumerate() {
            lp.add_row(c, Sense::Le, self.rows[block.rows[i]].capacity as f64);
        }
        (lp, offset)
    }
}

struct BlockResult {
    x: Vec<f64>,
    lower: f64,
    rounds: usize,
    first_integral: bool,
    iterations: usize,
}

fn round_block(lp: &LinearProgram, np: usize, opts: LpOptions, tol: f64) -> Result<BlockResult, Error> {
    let mut simplex = Simplex::new(lp, opts)?;
    let mut sol = simplex.solve();
    if sol.status != Status::Optimal {
        return Err(Error::Rounding(format!("relaxation ended {:?}", sol.status)));
    }
    let lower = sol.objective;
    let mut iterations = sol.iterations;
    let mut rounds = 0;
    let first_integral = most_fractional(&sol.x[..np], tol).is_none();
    let limit = 4 * np + 16;
    while let Some((j, v)) = most_fractional(&sol.x[..np], tol) {
        if rounds >= limit {
            return Err(Error::Rounding(format!("no integral point after {rounds} bounds")));
        }
        rounds += 1;
        let (lo, hi) = simplex.bounds(j);
        let (fl, ce) = (libm::floor(v), libm::ceil(v));
        let prefer_floor = v - fl <= ce - v;
        let tries = if prefer_floor { [(lo, fl), (ce, hi)] } else { [(ce, hi), (lo, fl)] };
        let mut next = None;
        for (a, b) in tries {
            let s = simplex.resolve_with_bounds(j, a, b);
            iterations += s.iterations;
            if s.status == Status::Optimal {
                next = Some(s);
                break;
            }
            simplex.resolve_with_bounds(j, lo, hi);
        }
        sol = next.ok_or_else(|| Error::Rounding(format!("both bounds on variable {j} are infeasible")))?;
    }
    Ok(BlockResult { x: sol.x[..np].to_vec(), lower, rounds, first_integral, iterations })
}

/// Solves the relaxation, then repeatedly bounds the most fractional path
/// variable (floor when it sits at or below the midpoint, ceiling otherwise)
/// and re-optimizes from the previous basis until the solution is integral.
/// Independent blocks of the program are solved separately.
pub fn solve_rounding(inst: &RoutingInstance, opts: LpOptions, tol: f64) -> Result<Rounding, Error> {
    let np = inst.paths.len();
    let mut bound = vec![0.0; np];
    let mut spr_penalty = vec![0.0; np];
    for c in &inst.commodities {
        for &p in &c.paths {
            bound[p] = c.demand as f64;
            spr_penalty[p] = c.penalty;
        }
    }
    let path_rows = inst.path_rows();
    let mut x = vec![0.0; np];
    let mut lower = 0.0;
    let mut rounds = 0;
    let mut first_integral = true;
    let mut iterations = 0;
    for block in inst.blocks(&path_rows) {
        if inst.kind == RouterKind::Spr && block.rows.is_empty() {
            for &p in &block.paths {
                if spr_penalty[p] > 0.0 {
                    x[p] = bound[p];
                }
            }
            continue;
        }
        let (lp, offset) = inst.block_relaxation(&block, &path_rows, &bound, &spr_penalty);
        let r = round_block(&lp, block.paths.len(), opts, tol)?;
        for (k, &p) in block.paths.iter().enumerate() {
            x[p] = r.x[k];
        }
        lower += r.lower + offset;
        rounds += r.rounds;
        first_integral &= r.first_integral;
        iterations += r.iterations;
    }
    let flows: Vec<u32> = x.iter().map(|&v| libm::round(v).max(0.0) as u32).collect();
    let upper = inst.objective(&flows);
    let gap = relative_gap(lower, upper);
    Ok(Rounding { flows, lower, upper, gap, rounds, first_integral, lp_iterations: iterations })
}

/// `(upper − lower) / lower`, 0 when both vanish.
pub fn relative_gap(lower: f64, upper: f64) -> f64 {
    let diff = (upper - lower).max(0.0);
    if diff <= 1e-9 * (1.0 + libm::fabs(upper)) {
        0.0
    } else {
        diff / lower.max(1e-9)
    }
}

/// Waiting penalty `(1 + l)·t̂`.
pub fn penalty(starved: u32, rhythm: f64) -> f64 {
    (1.0 + starved as f64) * rhythm
}

/// Advances starvation counters from the queues left after routing and
/// returns the new penalties.
pub fn escalate_penalties(counters: &mut [u32], remaining: &[u32], rhythm: f64) -> Vec<f64> {
    counters
        .iter_mut()
        .zip(remaining)
        .map(|(l, &q)| {
            *l = if q > 0 { *l + 1 } else { 0 };
            penalty(*l, rhythm)
        })
        .collect()
}

/// Books the admitted flow on every temporal link it rides; all or nothing.
pub fn commit_reservations(
    inst: &RoutingInstance,
    flows: &[u32],
    table: &mut ReservationTable,
) -> Result<(), Error> {
    let mut need: HashMap<TemporalLink, u32> = HashMap::new();
    for (p, &f) in inst.paths.iter().zip(flows) {
        if f == 0 {
            continue;
        }
        for t in &p.temporal {
            *need.entry(*t).or_insert(0) += f;
        }
    }
    let mut order: Vec<(TemporalLink, u32)> = need.into_iter().collect();
    order.sort_by_key(|(t, _)| *t);
    if let Some((t, _)) = order.iter().find(|(t, n)| table.remaining(*t) < *n) {
        return Err(Error::OverCommit { link: t.link, interval: t.interval });
    }
    for (t, n) in order {
        table.reserve(t, n)?;
    }
    Ok(())
}
