//! One-way alternating grid networks.
//!
//! Coordinates: `x` grows to the right, `y` grows upward. Horizontal street
//! `j = 0` is the bottom one and runs rightward; vertical street `i = 0` is
//! the leftmost and runs downward. Directions alternate within each group,
//! so the perimeter is a counterclockwise loop when both counts are even.

use alloc::collections::{BinaryHeap, VecDeque};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Error;

pub type NodeId = usize;
pub type LinkId = usize;
pub type PieceId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Axis {
    Horizontal,
    Vertical,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodeKind {
    /// Intersection of horizontal street `h` and vertical street `v`.
    Crossroads { h: usize, v: usize },
    Entrance { street: usize },
    Exit { street: usize },
    Junction { street: usize, link: LinkId, slot: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub kind: NodeKind,
    pub x: f64,
    pub y: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LinkKind {
    Approach,
    Block,
    Departure,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub street: usize,
    pub kind: LinkKind,
    pub from: NodeId,
    pub to: NodeId,
    pub length: f64,
    pub lanes: u32,
    /// Distance from the street's entrance to `from`.
    pub offset: f64,
    /// Junctions on this link with their distance from `from`.
    pub junctions: Vec<(NodeId, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Street {
    pub axis: Axis,
    pub index: usize,
    /// Travels toward growing `x` (horizontal) or growing `y` (vertical).
    pub increasing: bool,
    pub entrance: NodeId,
    pub exit: NodeId,
    pub links: Vec<LinkId>,
}

/// Arc between consecutive nodes along a street; links are split into
/// pieces at junctions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub from: NodeId,
    pub to: NodeId,
    pub link: LinkId,
    /// Distance from the link's upstream node to `from`.
    pub start: f64,
    pub length: f64,
}

/// Plain-data description of a grid; the serializable form of a network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSpec {
    pub m: usize,
    pub n: usize,
    /// Spacing between consecutive vertical streets (n - 1 values).
    pub block_lengths_h: Vec<f64>,
    /// Spacing between consecutive horizontal streets (m - 1 values).
    pub block_lengths_v: Vec<f64>,
    /// Length of entrance and exit links; defaults to the first block length.
    #[serde(default)]
    pub approach_length: Option<f64>,
    pub lanes: u32,
    pub junctions_per_segment: usize,
}

impl NetworkSpec {
    pub fn homogeneous(m: usize, n: usize, block: f64, lanes: u32, junctions: usize) -> Self {
        Self {
            m,
            n,
            block_lengths_h: vec![block; n.saturating_sub(1)],
            block_lengths_v: vec![block; m.saturating_sub(1)],
            approach_length: None,
            lanes,
            junctions_per_segment: junctions,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridNetwork {
    pub spec: NetworkSpec,
    pub approach_length: f64,
    pub nodes: Vec<Node>,
    pub links: Vec<Link>,
    pub streets: Vec<Street>,
    pub pieces: Vec<Piece>,
    pub out_pieces: Vec<Vec<PieceId>>,
    pub in_pieces: Vec<Vec<PieceId>>,
    crossroads: Vec<NodeId>,
}

pub fn build_grid(
    m: usize,
    n: usize,
    block_length: f64,
    lanes: u32,
    junctions_per_segment: usize,
) -> Result<GridNetwork, Error> {
    GridNetwork::from_spec(&NetworkSpec::homogeneous(m, n, block_length, lanes, junctions_per_segment))
}

impl GridNetwork {
    pub fn from_spec(spec: &NetworkSpec) -> Result<Self, Error> {
        let (m, n) = (spec.m, spec.n);
        if m < 2 || n < 2 || m % 2 == 1 || n % 2 == 1 {
            return Err(Error::InvalidDimensions { m, n });
        }
        if spec.block_lengths_h.len() != n - 1 || spec.block_lengths_v.len() != m - 1 {
            return Err(Error::InvalidNetwork(format!(
                "expected {} horizontal and {} vertical block lengths",
                n - 1,
                m - 1
            )));
        }
        if spec.block_lengths_h.iter().chain(&spec.block_lengths_v).any(|l| !(*l > 0.0) || !l.is_finite()) {
            return Err(Error::InvalidNetwork("block lengths must be positive".into()));
        }
        if spec.lanes == 0 {
            return Err(Error::InvalidNetwork("at least one lane per street".into()));
        }
        let approach = spec.approach_length.unwrap_or(spec.block_lengths_h[0]);
        if !(approach > 0.0) || !approach.is_finite() {
            return Err(Error::InvalidNetwork("approach length must be positive".into()));
        }
        let xs = prefix(&spec.block_lengths_h);
        let ys = prefix(&spec.block_lengths_v);

        let mut nodes = Vec::new();
        let mut crossroads = vec![0; m * n];
        for h in 0..m {
            for v in 0..n {
                crossroads[h * n + v] = nodes.len();
                nodes.push(Node { kind: NodeKind::Crossroads { h, v }, x: xs[v], y: ys[h] });
            }
        }
        let mut net = GridNetwork {
            spec: spec.clone(),
            approach_length: approach,
            nodes,
            links: Vec::new(),
            streets: Vec::new(),
            pieces: Vec::new(),
            out_pieces: Vec::new(),
            in_pieces: Vec::new(),
            crossroads,
        };
        for s in 0..m + n {
            let (axis, index) = if s < m { (Axis::Horizontal, s) } else { (Axis::Vertical, s - m) };
            let increasing = match axis {
                Axis::Horizontal => index % 2 == 0,
                Axis::Vertical => index % 2 == 1,
            };
            let count = if axis == Axis::Horizontal { n } else { m };
            let mut order: Vec<usize> = (0..count).collect();
            if !increasing {
                order.reverse();
            }
            let cross: Vec<NodeId> = order
                .iter()
                .map(|&k| match axis {
                    Axis::Horizontal => net.crossroads[index * n + k],
                    Axis::Vertical => net.crossroads[k * n + index],
                })
                .collect();
            let sign = if increasing { 1.0 } else { -1.0 };
            let (dx, dy) = match axis {
                Axis::Horizontal => (sign, 0.0),
                Axis::Vertical => (0.0, sign),
            };
            let first = &net.nodes[cross[0]];
            let entrance = net.nodes.len();
            net.nodes.push(Node {
                kind: NodeKind::Entrance { street: s },
                x: first.x - dx * approach,
                y: first.y - dy * approach,
            });
            let last = &net.nodes[*cross.last().unwrap()];
            let exit = net.nodes.len();
            net.nodes.push(Node { kind: NodeKind::Exit { street: s }, x: last.x + dx * approach, y: last.y + dy * approach });

            let mut links = Vec::new();
            let mut offset = 0.0;
            let mut push_link = |net: &mut GridNetwork, kind, from: NodeId, to: NodeId, length: f64| {
                let id = net.links.len();
                net.links.push(Link {
                    street: s,
                    kind,
                    from,
                    to,
                    length,
                    lanes: spec.lanes,
                    offset,
                    junctions: Vec::new(),
                });
                offset += length;
                links.push(id);
                id
            };
            push_link(&mut net, LinkKind::Approach, entrance, cross[0], approach);
            for w in cross.windows(2) {
                let (a, b) = (&net.nodes[w[0]], &net.nodes[w[1]]);
                let length = libm::fabs(a.x - b.x) + libm::fabs(a.y - b.y);
                let id = push_link(&mut net, LinkKind::Block, w[0], w[1], length);
                let k = spec.junctions_per_segment;
                for slot in 0..k {
                    let along = length * (slot + 1) as f64 / (k + 1) as f64;
                    let (ax, ay) = (net.nodes[w[0]].x, net.nodes[w[0]].y);
                    let j = net.nodes.len();
                    net.nodes.push(Node {
                        kind: NodeKind::Junction { street: s, link: id, slot },
                        x: ax + dx * along,
                        y: ay + dy * along,
                    });
                    net.links[id].junctions.push((j, along));
                }
            }
            push_link(&mut net, LinkKind::Departure, *cross.last().unwrap(), exit, approach);
            net.streets.push(Street { axis, index, increasing, entrance, exit, links });
        }
        for id in 0..net.links.len() {
            let link = net.links[id].clone();
            let mut stops: Vec<(NodeId, f64)> = vec![(link.from, 0.0)];
            stops.extend(link.junctions.iter().copied());
            stops.push((link.to, link.length));
            for w in stops.windows(2) {
                net.pieces.push(Piece { from: w[0].0, to: w[1].0, link: id, start: w[0].1, length: w[1].1 - w[0].1 });
            }
        }
        net.rebuild_adjacency();
        Ok(net)
    }

    fn rebuild_adjacency(&mut self) {
        self.out_pieces = vec![Vec::new(); self.nodes.len()];
        self.in_pieces = vec![Vec::new(); self.nodes.len()];
        for (p, piece) in self.pieces.iter().enumerate() {
            self.out_pieces[piece.from].push(p);
            self.in_pieces[piece.to].push(p);
        }
    }

    /// Reverses every piece of a link in place. Only useful for probing the
    /// accessibility check on non-conforming topologies.
    pub fn reverse_link(&mut self, link: LinkId) {
        for piece in self.pieces.iter_mut().filter(|p| p.link == link) {
            core::mem::swap(&mut piece.from, &mut piece.to);
        }
        self.rebuild_adjacency();
    }

    pub fn m(&self) -> usize {
        self.spec.m
    }

    pub fn n(&self) -> usize {
        self.spec.n
    }

    pub fn crossroads(&self, h: usize, v: usize) -> NodeId {
        self.crossroads[h * self.spec.n + v]
    }

    pub fn crossroads_ids(&self) -> &[NodeId] {
        &self.crossroads
    }

    pub fn nodes_where(&self, f: impl Fn(&NodeKind) -> bool) -> Vec<NodeId> {
        (0..self.nodes.len()).filter(|&i| f(&self.nodes[i].kind)).collect()
    }

    pub fn entrances(&self) -> Vec<NodeId> {
        self.nodes_where(|k| matches!(k, NodeKind::Entrance { .. }))
    }

    pub fn exits(&self) -> Vec<NodeId> {
        self.nodes_where(|k| matches!(k, NodeKind::Exit { .. }))
    }

    pub fn junctions(&self) -> Vec<NodeId> {
        self.nodes_where(|k| matches!(k, NodeKind::Junction { .. }))
    }

    /// Entrances and junctions.
    pub fn origins(&self) -> Vec<NodeId> {
        self.nodes_where(|k| matches!(k, NodeKind::Entrance { .. } | NodeKind::Junction { .. }))
    }

    /// Exits and junctions.
    pub fn destinations(&self) -> Vec<NodeId> {
        self.nodes_where(|k| matches!(k, NodeKind::Exit { .. } | NodeKind::Junction { .. }))
    }

    pub fn street_of(&self, node: NodeId) -> Option<usize> {
        match self.nodes[node].kind {
            NodeKind::Entrance { street } | NodeKind::Exit { street } | NodeKind::Junction { street, .. } => {
                Some(street)
            }
            NodeKind::Crossroads { .. } => None,
        }
    }

    /// Distance of a non-crossroads node from its street's entrance.
    pub fn street_position(&self, node: NodeId) -> Option<f64> {
        match self.nodes[node].kind {
            NodeKind::Entrance { .. } => Some(0.0),
            NodeKind::Exit { street } => {
                let last = *self.streets[street].links.last().unwrap();
                Some(self.links[last].offset + self.links[last].length)
            }
            NodeKind::Junction { link, slot, .. } => {
                Some(self.links[link].offset + self.links[link].junctions[slot].1)
            }
            NodeKind::Crossroads { .. } => None,
        }
    }

    pub fn manhattan(&self, a: NodeId, b: NodeId) -> f64 {
        let (p, q) = (&self.nodes[a], &self.nodes[b]);
        libm::fabs(p.x - q.x) + libm::fabs(p.y - q.y)
    }

    /// Counterclockwise perimeter cycle as a list of block links, starting at
    /// the bottom-left crossroads.
    pub fn perimeter_cycle(&self) -> Vec<LinkId> {
        let (m, n) = (self.spec.m, self.spec.n);
        let bottom = &self.streets[0];
        let right = &self.streets[m + n - 1];
        let top = &self.streets[m - 1];
        let left = &self.streets[m];
        let blocks = |s: &Street| -> Vec<LinkId> {
            s.links.iter().copied().filter(|&l| self.links[l].kind == LinkKind::Block).collect()
        };
        let mut cycle = blocks(bottom);
        cycle.extend(blocks(right));
        cycle.extend(blocks(top));
        cycle.extend(blocks(left));
        cycle
    }

    pub fn graph_diameter_links(&self) -> usize {
        2 * (self.spec.m + self.spec.n) + 4
    }
}

fn prefix(lengths: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0];
    for l in lengths {
        let last = *out.last().unwrap();
        out.push(last + l);
    }
    out
}

/// Every entrance or junction reaches every exit or junction.
pub fn check_global_accessibility(net: &GridNetwork) -> bool {
    let targets = net.destinations();
    for o in net.origins() {
        let seen = reachable_from(net, o);
        if targets.iter().any(|&t| t != o && !seen[t]) {
            return false;
        }
    }
    true
}

pub fn reachable_from(net: &GridNetwork, src: NodeId) -> Vec<bool> {
    let mut seen = vec![false; net.nodes.len()];
    let mut queue = VecDeque::new();
    seen[src] = true;
    queue.push_back(src);
    while let Some(u) = queue.pop_front() {
        for &p in &net.out_pieces[u] {
            let v = net.pieces[p].to;
            if !seen[v] {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    seen
}

/// A directed walk from `origin` to `destination` as a piece sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Route {
    pub origin: NodeId,
    pub destination: NodeId,
    pub pieces: Vec<PieceId>,
    pub length: f64,
}

impl Route {
    /// Link sequence with consecutive pieces of one link merged.
    pub fn links(&self, net: &GridNetwork) -> Vec<LinkId> {
        let mut out: Vec<LinkId> = Vec::new();
        let mut prev: Option<PieceId> = None;
        for &p in &self.pieces {
            let link = net.pieces[p].link;
            let continues = prev.map_or(false, |q| net.pieces[q].link == link && net.pieces[q].to == net.pieces[p].from);
            if !continues {
                out.push(link);
            }
            prev = Some(p);
        }
        out
    }

    pub fn turns(&self, net: &GridNetwork) -> usize {
        self.pieces
            .windows(2)
            .filter(|w| net.links[net.pieces[w[0]].link].street != net.links[net.pieces[w[1]].link].street)
            .count()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OdPair {
    pub origin: NodeId,
    pub destination: NodeId,
}

/// OD pair annotated with its Manhattan and shortest directed distances.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OdDistances {
    pub od: OdPair,
    pub manhattan: f64,
    pub shortest: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OdSet {
    /// All ordered pairs of distinct crossroads.
    Crossroads,
    /// Every entrance to every exit.
    EntranceExit,
    /// (entrances ∪ junctions) × (exits ∪ junctions), minus identical nodes.
    Terminals,
}

pub fn od_pairs(net: &GridNetwork, set: OdSet) -> Vec<OdPair> {
    let (origins, dests) = match set {
        OdSet::Crossroads => (net.crossroads_ids().to_vec(), net.crossroads_ids().to_vec()),
        OdSet::EntranceExit => (net.entrances(), net.exits()),
        OdSet::Terminals => (net.origins(), net.destinations()),
    };
    let mut out = Vec::new();
    for &o in &origins {
        for &d in &dests {
            if o != d {
                out.push(OdPair { origin: o, destination: d });
            }
        }
    }
    out
}

const TIGHT: f64 = 1e-7;

#[derive(Clone, Copy, PartialEq)]
struct HeapItem(f64, NodeId);

impl Eq for HeapItem {}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

/// All-pairs shortest distances with path counts, computed by one reverse
/// Dijkstra per target node.
#[derive(Clone, Debug)]
pub struct ShortestPaths {
    n: usize,
    /// `dist[t * n + u]`: shortest distance from `u` to `t`.
    dist: Vec<f64>,
    /// Number of distinct shortest paths from `u` to `t`.
    count: Vec<f64>,
}

impl ShortestPaths {
    pub fn new(net: &GridNetwork) -> Self {
        let n = net.nodes.len();
        let mut dist = vec![f64::INFINITY; n * n];
        let mut count = vec![0.0; n * n];
        for t in 0..n {
            let d = &mut dist[t * n..(t + 1) * n];
            d[t] = 0.0;
            let mut heap = BinaryHeap::new();
            heap.push(HeapItem(0.0, t));
            let mut order = Vec::with_capacity(n);
            let mut done = vec![false; n];
            while let Some(HeapItem(du, u)) = heap.pop() {
                if done[u] || du > d[u] {
                    continue;
                }
                done[u] = true;
                order.push(u);
                for &p in &net.in_pieces[u] {
                    let v = net.pieces[p].from;
                    let nd = du + net.pieces[p].length;
                    if nd < d[v] - TIGHT {
                        d[v] = nd;
                        heap.push(HeapItem(nd, v));
                    }
                }
            }
            let c = &mut count[t * n..(t + 1) * n];
            c[t] = 1.0;
            for &u in order.iter().skip(1) {
                let mut total = 0.0;
                for &p in &net.out_pieces[u] {
                    let v = net.pieces[p].to;
                    if libm::fabs(net.pieces[p].length + d[v] - d[u]) <= TIGHT {
                        total += c[v];
                    }
                }
                c[u] = total;
            }
        }
        Self { n, dist, count }
    }

    pub fn distance(&self, from: NodeId, to: NodeId) -> f64 {
        self.dist[to * self.n + from]
    }

    pub fn path_count(&self, from: NodeId, to: NodeId) -> f64 {
        self.count[to * self.n + from]
    }

    fn tight(&self, net: &GridNetwork, p: PieceId, to: NodeId) -> bool {
        let piece = &net.pieces[p];
        let du = self.distance(piece.from, to);
        let dv = self.distance(piece.to, to);
        dv.is_finite() && libm::fabs(piece.length + dv - du) <= TIGHT
    }

    fn walk(
        &self,
        net: &GridNetwork,
        od: OdPair,
        mut choose: impl FnMut(&[PieceId]) -> PieceId,
    ) -> Result<Route, Error> {
        if od.origin == od.destination || !self.distance(od.origin, od.destination).is_finite() {
            return Err(Error::Unreachable { from: od.origin, to: od.destination });
        }
        let mut u = od.origin;
        let mut pieces = Vec::new();
        let mut options = Vec::new();
        while u != od.destination {
            options.clear();
            options.extend(net.out_pieces[u].iter().copied().filter(|&p| self.tight(net, p, od.destination)));
            options.sort_unstable();
            let p = choose(&options);
            pieces.push(p);
            u = net.pieces[p].to;
        }
        Ok(Route {
            origin: od.origin,
            destination: od.destination,
            pieces,
            length: self.distance(od.origin, od.destination),
        })
    }

    /// Shortest route whose piece-id sequence is lexicographically smallest.
    pub fn lexicographic(&self, net: &GridNetwork, od: OdPair) -> Result<Route, Error> {
        self.walk(net, od, |opts| opts[0])
    }

    /// Shortest route drawn uniformly among all shortest routes.
    pub fn sample<R: Rng + ?Sized>(&self, net: &GridNetwork, od: OdPair, rng: &mut R) -> Result<Route, Error> {
        let t = od.destination;
        self.walk(net, od, |opts| {
            if opts.len() == 1 {
                return opts[0];
            }
            let weights: Vec<f64> = opts.iter().map(|&p| self.path_count(net.pieces[p].to, t)).collect();
            let total: f64 = weights.iter().sum();
            let mut r = rng.gen::<f64>() * total;
            for (k, w) in weights.iter().enumerate() {
                if r < *w {
                    return opts[k];
                }
                r -= w;
            }
            *opts.last().unwrap()
        })
    }

    /// Every route from `od.origin` to `od.destination` at most `budget`
    /// meters longer than the shortest one. Routes stop at the destination's
    /// first visit; cycles are allowed when they fit the budget.
    pub fn within_budget(&self, net: &GridNetwork, od: OdPair, budget: f64, limit: usize) -> Vec<Route> {
        let best = self.distance(od.origin, od.destination);
        let mut out = Vec::new();
        if !best.is_finite() || od.origin == od.destination {
            return out;
        }
        let cap = best + budget + TIGHT;
        let mut stack: Vec<PieceId> = Vec::new();
        self.dfs(net, od, od.origin, 0.0, cap, &mut stack, &mut out, limit);
        out
    }

    #[allow(clippy::too_many_arguments)]
    fn dfs(
        &self,
        net: &GridNetwork,
        od: OdPair,
        u: NodeId,
        sofar: f64,
        cap: f64,
        stack: &mut Vec<PieceId>,
        out: &mut Vec<Route>,
        limit: usize,
    ) {
        if out.len() >= limit {
            return;
        }
        if u == od.destination {
            out.push(Route { origin: od.origin, destination: od.destination, pieces: stack.clone(), length: sofar });
            return;
        }
        for &p in &net.out_pieces[u] {
            let piece = &net.pieces[p];
            let next = sofar + piece.length;
            if next + self.distance(piece.to, od.destination) <= cap {
                stack.push(p);
                self.dfs(net, od, piece.to, next, cap, stack, out, limit);
                stack.pop();
            }
        }
    }

    pub fn od_distances(&self, net: &GridNetwork, od: OdPair) -> OdDistances {
        OdDistances { od, manhattan: net.manhattan(od.origin, od.destination), shortest: self.distance(od.origin, od.destination) }
    }
}

/// Σ shortest / Σ Manhattan over an equally weighted OD set.
pub fn average_detour_ratio(net: &GridNetwork, sp: &ShortestPaths, ods: &[OdPair]) -> Result<f64, Error> {
    if ods.is_empty() {
        return Err(Error::EmptyOdSet);
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for &od in ods {
        let s = sp.distance(od.origin, od.destination);
        if !s.is_finite() {
            return Err(Error::Unreachable { from: od.origin, to: od.destination });
        }
        num += s;
        den += net.manhattan(od.origin, od.destination);
    }
    Ok(num / den)
}
