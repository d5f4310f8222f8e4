//! Network rhythm: platoon entry schedules, capacities and the
//! trajectory-level conflict check.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::grid::{Axis, GridNetwork, LinkId, LinkKind, NodeId};
use crate::lp::{self, LinearProgram, Sense, Status};

const EPS: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RhythmConfig {
    /// Rhythm length t̂ in seconds; also the routing interval.
    pub rhythm: f64,
    /// Platoon cruise speed in m/s.
    pub speed: f64,
    /// Horizontal share of each rhythm.
    #[serde(default = "half")]
    pub beta: f64,
    /// Maximum platoon length in meters (horizontal streets, and vertical
    /// ones unless overridden).
    pub platoon_length: f64,
    #[serde(default)]
    pub platoon_length_vertical: Option<f64>,
    /// Minimum headway between vehicles in a platoon, seconds.
    pub headway: f64,
    /// Vehicle slots reserved as buffer at each platoon end.
    pub buffer_vehicles: u32,
    /// Overrides the derived crossroads capacity N̄_p.
    #[serde(default)]
    pub crossroads_capacity: Option<u32>,
    /// Overrides the derived between-crossroads capacity N_seg.
    #[serde(default)]
    pub segment_capacity: Option<u32>,
}

fn half() -> f64 {
    0.5
}

impl RhythmConfig {
    /// Balanced rhythm whose platoons fill exactly half the rhythm.
    pub fn balanced(rhythm: f64, speed: f64) -> Self {
        Self {
            rhythm,
            speed,
            beta: 0.5,
            platoon_length: 0.5 * rhythm * speed,
            platoon_length_vertical: None,
            headway: 0.5,
            buffer_vehicles: 2,
            crossroads_capacity: None,
            segment_capacity: None,
        }
    }

    pub fn platoon_length_for(&self, axis: Axis) -> f64 {
        match axis {
            Axis::Horizontal => self.platoon_length,
            Axis::Vertical => self.platoon_length_vertical.unwrap_or(self.platoon_length),
        }
    }

    /// Offset of the first platoon on a street, as a fraction of t̂.
    pub fn entry_phase(&self, axis: Axis) -> f64 {
        match axis {
            Axis::Horizontal => 0.0,
            Axis::Vertical => self.beta,
        }
    }

    pub fn axis_share(&self, axis: Axis) -> f64 {
        match axis {
            Axis::Horizontal => self.beta,
            Axis::Vertical => 1.0 - self.beta,
        }
    }

    /// Travel time over a distance at cruise speed.
    pub fn travel_time(&self, meters: f64) -> f64 {
        meters / self.speed
    }

    /// Multiple `a` with block travel time `a·t̂`, if integral.
    pub fn segment_multiple(&self, block_length: f64) -> Option<u32> {
        let a = block_length / self.speed / self.rhythm;
        let r = libm::round(a);
        if r >= 1.0 && libm::fabs(a - r) <= 1e-9 * (1.0 + a) {
            Some(r as u32)
        } else {
            None
        }
    }

    pub fn validate(&self, net: &GridNetwork) -> Result<(), Error> {
        let bad = |msg: alloc::string::String| Err(Error::InvalidRhythm(msg));
        if !(self.rhythm > 0.0) || !(self.speed > 0.0) || !(self.headway > 0.0) {
            return bad("rhythm, speed and headway must be positive".into());
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return bad(format!("beta {} leaves one direction without a window", self.beta));
        }
        for axis in [Axis::Horizontal, Axis::Vertical] {
            let window = self.axis_share(axis) * self.rhythm;
            let occupancy = self.platoon_length_for(axis) / self.speed;
            if !(self.platoon_length_for(axis) > 0.0) || occupancy > window + EPS {
                return bad(format!("{axis:?} platoons occupy a crossroads {occupancy} s, window is {window} s"));
            }
        }
        for l in net.spec.block_lengths_h.iter().chain(&net.spec.block_lengths_v) {
            if self.segment_multiple(*l).is_none() {
                return bad(format!("block of {l} m is not an integer number of rhythms at {} m/s", self.speed));
            }
        }
        let (_, valid) = platoon_capacity(self.rhythm, self.headway, self.buffer_vehicles, 0.5, net.spec.lanes);
        if self.crossroads_capacity.is_none() && valid == 0 {
            return bad("platoon capacity is zero after buffers".into());
        }
        Ok(())
    }

    /// Valid platoon capacity N̄_p for one axis.
    pub fn crossroads_capacity_for(&self, axis: Axis, lanes: u32) -> u32 {
        self.crossroads_capacity.unwrap_or_else(|| {
            platoon_capacity(self.rhythm, self.headway, self.buffer_vehicles, self.axis_share(axis), lanes).1
        })
    }

    /// Between-crossroads capacity N_seg: the raw size minus one buffer end.
    pub fn segment_capacity_for(&self, axis: Axis, lanes: u32) -> u32 {
        self.segment_capacity.unwrap_or_else(|| {
            let (raw, _) = platoon_capacity(self.rhythm, self.headway, self.buffer_vehicles, self.axis_share(axis), lanes);
            raw.saturating_sub(self.buffer_vehicles)
        })
    }
}

/// Raw and valid platoon sizes: `raw = floor(lanes·share·t̂ / headway)`,
/// `valid = raw − 2·buffer`.
pub fn platoon_capacity(rhythm: f64, headway: f64, buffer_vehicles: u32, share: f64, lanes: u32) -> (u32, u32) {
    let raw = libm::floor(lanes as f64 * share * rhythm / headway + 1e-9);
    let raw = if raw > 0.0 { raw as u32 } else { 0 };
    (raw, raw.saturating_sub(2 * buffer_vehicles))
}

/// Valid-zone proportion p_t̂ = valid / raw.
pub fn valid_zone_share(rhythm: f64, headway: f64, buffer_vehicles: u32, lanes: u32) -> f64 {
    let (raw, valid) = platoon_capacity(rhythm, headway, buffer_vehicles, 0.5, lanes);
    if raw == 0 {
        0.0
    } else {
        valid as f64 / raw as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntrySchedule {
    pub rhythm: f64,
    /// Entry epochs per street, indexed like `GridNetwork::streets`.
    pub epochs: Vec<Vec<f64>>,
}

impl EntrySchedule {
    pub fn horizontal(&self, net: &GridNetwork) -> &[f64] {
        &self.epochs[net.streets.iter().position(|s| s.axis == Axis::Horizontal).unwrap()]
    }

    pub fn vertical(&self, net: &GridNetwork) -> &[f64] {
        &self.epochs[net.streets.iter().position(|s| s.axis == Axis::Vertical).unwrap()]
    }
}

pub fn build_schedule(cfg: &RhythmConfig, net: &GridNetwork, horizon: f64) -> Result<EntrySchedule, Error> {
    cfg.validate(net)?;
    Ok(schedule_unchecked(cfg, net, horizon))
}

/// Entry epochs `(k + phase)·t̂ < horizon` without validating the config.
pub fn schedule_unchecked(cfg: &RhythmConfig, net: &GridNetwork, horizon: f64) -> EntrySchedule {
    let epochs = net
        .streets
        .iter()
        .map(|s| {
            let phase = cfg.entry_phase(s.axis);
            let mut out = Vec::new();
            let mut k = 0u64;
            loop {
                let t = (k as f64 + phase) * cfg.rhythm;
                if t >= horizon - EPS {
                    break;
                }
                out.push(t);
                k += 1;
            }
            out
        })
        .collect();
    EntrySchedule { rhythm: cfg.rhythm, epochs }
}

/// A platoon's occupancy of one crossroads.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Occupancy {
    pub node: NodeId,
    pub axis: Axis,
    pub street: usize,
    pub start: f64,
    pub end: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Conflict {
    pub node: NodeId,
    pub time: f64,
    pub horizontal_street: usize,
    pub vertical_street: usize,
    pub overlap: f64,
}

/// Distances from a street's entrance to each crossroads it crosses.
pub fn crossroads_offsets(net: &GridNetwork, street: usize) -> Vec<(NodeId, f64)> {
    net.streets[street]
        .links
        .iter()
        .map(|&l| &net.links[l])
        .filter(|l| l.kind != LinkKind::Approach)
        .map(|l| (l.from, l.offset))
        .collect()
}

/// Occupancy windows of every scheduled platoon at constant cruise speed.
pub fn occupancies(cfg: &RhythmConfig, net: &GridNetwork, schedule: &EntrySchedule, horizon: f64) -> Vec<Occupancy> {
    let mut out = Vec::new();
    for (s, street) in net.streets.iter().enumerate() {
        let dwell = cfg.platoon_length_for(street.axis) / cfg.speed;
        let offsets = crossroads_offsets(net, s);
        for &entry in &schedule.epochs[s] {
            for &(node, dist) in &offsets {
                let start = entry + dist / cfg.speed;
                if start < horizon {
                    out.push(Occupancy { node, axis: street.axis, street: s, start, end: start + dwell });
                }
            }
        }
    }
    out
}

/// Every pair of perpendicular occupancy windows that share a crossroads
/// for longer than 1e-9 s.
pub fn find_conflicts(windows: &[Occupancy]) -> Vec<Conflict> {
    let mut by_node: Vec<Occupancy> = windows.to_vec();
    by_node.sort_by(|a, b| a.node.cmp(&b.node).then(a.start.total_cmp(&b.start)));
    let mut out = Vec::new();
    let mut i = 0;
    while i < by_node.len() {
        let mut j = i;
        while j < by_node.len() && by_node[j].node == by_node[i].node {
            j += 1;
        }
        let group = &by_node[i..j];
        let hs: Vec<&Occupancy> = group.iter().filter(|o| o.axis == Axis::Horizontal).collect();
        let vs: Vec<&Occupancy> = group.iter().filter(|o| o.axis == Axis::Vertical).collect();
        let mut lo = 0;
        for h in &hs {
            while lo < vs.len() && vs[lo].end <= h.start {
                lo += 1;
            }
            for v in vs[lo..].iter().take_while(|v| v.start < h.end) {
                let overlap = h.end.min(v.end) - h.start.max(v.start);
                if overlap > EPS {
                    out.push(Conflict {
                        node: h.node,
                        time: h.start.max(v.start),
                        horizontal_street: h.street,
                        vertical_street: v.street,
                        overlap,
                    });
                }
            }
        }
        i = j;
    }
    out
}

/// Trajectory-level conflict check of a schedule at constant speed.
pub fn verify_conflict_free(
    cfg: &RhythmConfig,
    net: &GridNetwork,
    schedule: &EntrySchedule,
    horizon: f64,
) -> Vec<Conflict> {
    find_conflicts(&occupancies(cfg, net, schedule, horizon))
}

/// Whether passages alternate between the two axes at every crossroads once
/// both directions have started arriving.
pub fn passages_alternate(windows: &[Occupancy]) -> bool {
    let mut sorted: Vec<&Occupancy> = windows.iter().collect();
    sorted.sort_by(|a, b| a.node.cmp(&b.node).then(a.start.total_cmp(&b.start)));
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j < sorted.len() && sorted[j].node == sorted[i].node {
            j += 1;
        }
        let group = &sorted[i..j];
        let first_h = group.iter().position(|o| o.axis == Axis::Horizontal);
        let first_v = group.iter().position(|o| o.axis == Axis::Vertical);
        if let (Some(a), Some(b)) = (first_h, first_v) {
            let begin = a.max(b) - 1;
            for w in group[begin..].windows(2) {
                if w[0].axis == w[1].axis {
                    return false;
                }
            }
        }
        i = j;
    }
    true
}

/// Per-OD demand and its candidate routes as link sequences.
#[derive(Clone, Debug, PartialEq)]
pub struct OdRoutes {
    pub demand_vph: f64,
    pub routes: Vec<Vec<LinkId>>,
}

/// Link capacity C = ½·p·lanes·y_m in vehicles per hour.
pub fn link_capacity_vph(p: f64, lanes: u32, saturation_vph_per_lane: f64) -> f64 {
    0.5 * p * lanes as f64 * saturation_vph_per_lane
}

/// Whether demand can be routed with every link loaded at most γ·C.
pub fn demand_fits(
    demand: &[OdRoutes],
    net: &GridNetwork,
    gamma: f64,
    link_cap_vph: f64,
) -> Result<bool, Error> {
    let mut lp = LinearProgram::new();
    let mut per_link: Vec<Vec<(usize, f64)>> = vec![Vec::new(); net.links.len()];
    for od in demand.iter().filter(|d| d.demand_vph > 0.0) {
        if od.routes.is_empty() {
            return Ok(false);
        }
        let mut row = Vec::new();
        for route in &od.routes {
            let v = lp.add_var(0.0, 0.0, f64::INFINITY);
            row.push((v, 1.0));
            // A route crossing a link twice loads it twice.
            for &l in route {
                per_link[l].push((v, 1.0));
            }
        }
        lp.add_row(row, Sense::Eq, od.demand_vph);
    }
    let cap = gamma * link_cap_vph;
    for coeffs in per_link.into_iter().filter(|c| !c.is_empty()) {
        lp.add_row(coeffs, Sense::Le, cap);
    }
    Ok(lp::solve(&lp)?.status == Status::Optimal)
}

/// Smallest candidate rhythm whose capacity polytope admits the demand,
/// falling back to the largest candidate.
pub fn choose_rhythm_length(
    candidates: &[f64],
    demand: &[OdRoutes],
    net: &GridNetwork,
    gamma: f64,
    saturation_vph_per_lane: f64,
    valid_share: &dyn Fn(f64) -> f64,
) -> Result<f64, Error> {
    if candidates.is_empty() {
        return Err(Error::InvalidRhythm("no candidate rhythm lengths".into()));
    }
    let mut sorted = candidates.to_vec();
    sorted.sort_by(f64::total_cmp);
    for &t in &sorted {
        let cap = link_capacity_vph(valid_share(t), net.spec.lanes, saturation_vph_per_lane);
        if demand_fits(demand, net, gamma, cap)? {
            return Ok(t);
        }
    }
    Ok(*sorted.last().unwrap())
}
