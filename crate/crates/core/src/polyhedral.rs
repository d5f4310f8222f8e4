//! Combinatorial diagnostics of path/temporal-link incidence matrices:
//! local separability, total unimodularity, interconnection loops and the
//! randomized integrality study of the SPR relaxation.

use alloc::vec;
use alloc::vec::Vec;

use hashbrown::{HashMap, HashSet};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::grid::{od_pairs, GridNetwork, OdSet, ShortestPaths};
use crate::lp::LpOptions;
use crate::rhythm::{EntrySchedule, RhythmConfig};
use crate::rng::substream;
use crate::routing::{
    build_spr, compute_incidence, solve_rounding, OdQueue, ReservationTable, TemporalLink, TimedPath, INTEGRALITY_TOL,
};

/// Largest submatrix order the exhaustive checks accept.
pub const MAX_ORDER: usize = 8;
const MAX_DIM: usize = 64;

/// Rows and columns of an offending square submatrix.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
}

fn check_shape(c: &[Vec<u8>], order: usize) -> Result<(usize, usize), Error> {
    let rows = c.len();
    let cols = c.first().map_or(0, |r| r.len());
    if c.iter().any(|r| r.len() != cols) {
        return Err(Error::LpDimension("ragged incidence matrix"));
    }
    if order > MAX_ORDER {
        return Err(Error::TooLarge { size: order, cap: MAX_ORDER });
    }
    if rows > MAX_DIM || cols > MAX_DIM {
        return Err(Error::TooLarge { size: rows.max(cols), cap: MAX_DIM });
    }
    Ok((rows, cols))
}

/// Visits every `k`-subset of `0..n` as a sorted index list.
fn for_each_subset(n: usize, k: usize, mut f: impl FnMut(&[usize]) -> bool) -> bool {
    if k > n {
        return true;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        if !f(&idx) {
            return false;
        }
        let mut i = k;
        while i > 0 && idx[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return true;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn separable_block(c: &[Vec<u8>], rows: &[usize], cols: &[usize]) -> bool {
    let k = rows.len();
    // Row masks over the chosen columns and column masks over the chosen rows.
    let rmask: Vec<u32> = rows
        .iter()
        .map(|&r| cols.iter().enumerate().fold(0u32, |m, (j, &col)| m | (((c[r][col] != 0) as u32) << j)))
        .collect();
    let cmask: Vec<u32> = (0..k)
        .map(|j| rmask.iter().enumerate().fold(0u32, |m, (i, &rm)| m | (((rm >> j) & 1) << i)))
        .collect();
    let dup = |v: &[u32]| (0..v.len()).any(|a| (a + 1..v.len()).any(|b| v[a] == v[b]));
    if dup(&cmask) || dup(&rmask) {
        return true;
    }
    for t in 1u32..(1 << k) - 1 {
        let k0 = t.count_ones() as usize;
        let zero_rows = rmask.iter().filter(|&&rm| rm & t == 0).count();
        if zero_rows >= k - k0 {
            return true;
        }
    }
    false
}

/// Checks the local separability conditions for every square submatrix of
/// order 2..=`k_max`. Returns a violating submatrix when there is one.
pub fn is_locally_separable(c: &[Vec<u8>], k_max: usize) -> Result<Option<Witness>, Error> {
    let (rows, cols) = check_shape(c, k_max)?;
    let mut witness = None;
    for k in 2..=k_max.min(rows).min(cols) {
        let done = for_each_subset(rows, k, |rs| {
            for_each_subset(cols, k, |cs| {
                if separable_block(c, rs, cs) {
                    true
                } else {
                    witness = Some(Witness { rows: rs.to_vec(), cols: cs.to_vec() });
                    false
                }
            })
        });
        if !done {
            return Ok(witness);
        }
    }
    Ok(None)
}

/// Exact integer determinant by fraction-free elimination.
pub fn determinant(m: &[Vec<i64>]) -> i64 {
    let n = m.len();
    let mut a: Vec<Vec<i128>> = m.iter().map(|r| r.iter().map(|&v| v as i128).collect()).collect();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n {
        if a[k][k] == 0 {
            match (k + 1..n).find(|&i| a[i][k] != 0) {
                Some(i) => {
                    a.swap(i, k);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
            }
        }
        prev = a[k][k];
    }
    if n == 0 {
        1
    } else {
        (sign * a[n - 1][n - 1]) as i64
    }
}

/// Checks that every square submatrix has determinant −1, 0 or 1.
/// Returns the first offending submatrix.
pub fn is_totally_unimodular(c: &[Vec<u8>], cap: usize) -> Result<Option<Witness>, Error> {
    let (rows, cols) = check_shape(c, 0)?;
    let order = rows.min(cols);
    if order > cap || cap > MAX_ORDER {
        return Err(Error::TooLarge { size: order, cap: cap.min(MAX_ORDER) });
    }
    let mut witness = None;
    for k in 1..=order {
        let done = for_each_subset(rows, k, |rs| {
            for_each_subset(cols, k, |cs| {
                let sub: Vec<Vec<i64>> = rs.iter().map(|&r| cs.iter().map(|&j| c[r][j] as i64).collect()).collect();
                if determinant(&sub).abs() <= 1 {
                    true
                } else {
                    witness = Some(Witness { rows: rs.to_vec(), cols: cs.to_vec() });
                    false
                }
            })
        });
        if !done {
            return Ok(witness);
        }
    }
    Ok(None)
}

/// Square submatrix of order 3..=`max_order` in which every row touches at
/// least two columns, i.e. an interconnection loop among its paths.
pub fn find_interconnection_loop(c: &[Vec<u8>], max_order: usize) -> Result<Option<Witness>, Error> {
    let (rows, cols) = check_shape(c, max_order)?;
    let mut witness = None;
    for k in 3..=max_order.min(rows).min(cols) {
        let done = for_each_subset(rows, k, |rs| {
            for_each_subset(cols, k, |cs| {
                let looped = rs.iter().all(|&r| cs.iter().filter(|&&j| c[r][j] != 0).count() >= 2);
                if looped {
                    witness = Some(Witness { rows: rs.to_vec(), cols: cs.to_vec() });
                }
                !looped
            })
        });
        if !done {
            return Ok(witness);
        }
    }
    Ok(None)
}

/// One shortest route per OD of `set`, all boarding in `interval`.
pub fn shortest_timed_paths(
    net: &GridNetwork,
    cfg: &RhythmConfig,
    schedule: &EntrySchedule,
    set: OdSet,
    interval: i64,
) -> Result<Vec<TimedPath>, Error> {
    let sp = ShortestPaths::new(net);
    od_pairs(net, set)
        .into_iter()
        .map(|od| {
            let route = sp.lexicographic(net, od)?;
            compute_incidence(net, cfg, schedule, od, &route.links(net), interval)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoopReport {
    pub m: usize,
    pub n: usize,
    pub paths: usize,
    /// C(paths, 3).
    pub combinations: f64,
    /// Distinct temporal-link pairs co-traversed by some path.
    pub temporal_pairs: usize,
    pub loops: usize,
    pub probability: f64,
}

fn choose3(n: usize) -> f64 {
    let n = n as f64;
    n * (n - 1.0) * (n - 2.0) / 6.0
}

/// Counts distinct 3-path interconnection loops: triples of paths covering
/// the three pairs of a temporal-link triangle, each path missing the third
/// link of the triangle.
pub fn enumerate_3path_loops(net: &GridNetwork, paths: &[TimedPath]) -> LoopReport {
    let mut ids: HashMap<TemporalLink, u32> = HashMap::new();
    let traces: Vec<Vec<u32>> = paths
        .iter()
        .map(|p| {
            let mut t: Vec<u32> = p
                .temporal
                .iter()
                .map(|t| {
                    let next = ids.len() as u32;
                    *ids.entry(*t).or_insert(next)
                })
                .collect();
            t.sort_unstable();
            t.dedup();
            t
        })
        .collect();
    let mut pair_paths: HashMap<(u32, u32), Vec<u32>> = HashMap::new();
    for (r, t) in traces.iter().enumerate() {
        for i in 0..t.len() {
            for j in i + 1..t.len() {
                pair_paths.entry((t[i], t[j])).or_default().push(r as u32);
            }
        }
    }
    let mut adj: Vec<Vec<u32>> = vec![Vec::new(); ids.len()];
    for &(a, b) in pair_paths.keys() {
        adj[a as usize].push(b);
        adj[b as usize].push(a);
    }
    for a in adj.iter_mut() {
        a.sort_unstable();
    }
    let rides = |r: u32, t: u32| traces[r as usize].binary_search(&t).is_ok();
    let mut loops: HashSet<[u32; 3]> = HashSet::new();
    for (&(a, b), _) in pair_paths.iter() {
        // Each triangle a < b < c is visited once, from its smallest edge.
        for &c in adj[b as usize].iter().filter(|&&c| c > b) {
            if adj[a as usize].binary_search(&c).is_err() {
                continue;
            }
            let only = |x: u32, y: u32, z: u32| -> Vec<u32> {
                pair_paths[&(x, y)].iter().copied().filter(|&r| !rides(r, z)).collect()
            };
            let ab = only(a, b, c);
            let bc = only(b, c, a);
            let ac = only(a, c, b);
            for &r1 in &ab {
                for &r2 in &bc {
                    for &r3 in &ac {
                        let mut k = [r1, r2, r3];
                        k.sort_unstable();
                        loops.insert(k);
                    }
                }
            }
        }
    }
    let combinations = choose3(paths.len());
    LoopReport {
        m: net.m(),
        n: net.n(),
        paths: paths.len(),
        combinations,
        temporal_pairs: pair_paths.len(),
        loops: loops.len(),
        probability: if combinations > 0.0 { loops.len() as f64 / combinations } else { 0.0 },
    }
}

/// Outcome of one randomized SPR instance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub first_integral: bool,
    /// `(S_I − S_F) / S_I`; 0 when both vanish.
    pub gap: f64,
    pub columns: usize,
    pub rows: usize,
    pub rounds: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegralitySummary {
    pub trials: usize,
    pub integral_rate: f64,
    pub max_gap: f64,
}

/// Draws one randomized SPR instance over fixed timed paths and solves it.
pub fn integrality_trial<R: Rng + ?Sized>(
    net: &GridNetwork,
    paths: &[TimedPath],
    rng: &mut R,
    opts: LpOptions,
) -> Result<TrialOutcome, Error> {
    let g1: f64 = rng.gen();
    let g2: f64 = rng.gen();
    let g3: f64 = rng.gen();
    let mut table = ReservationTable::uniform(net.links.len(), 17);
    let mut seen: HashSet<TemporalLink> = HashSet::new();
    for p in paths {
        for t in &p.temporal {
            if seen.insert(*t) {
                let cap = libm::floor(g1 * rng.gen_range(0.0..=16.0)) as u32 + rng.gen_bool(0.5) as u32;
                table.reserve(*t, 17 - cap)?;
            }
        }
    }
    let queues: Vec<OdQueue> = paths
        .iter()
        .map(|p| {
            let demand = libm::floor(g2 * rng.gen_range(0.0..=32.0)) as u32 + rng.gen_bool(0.5) as u32;
            let active = !rng.gen_bool(g3);
            let weight: f64 = rng.gen_range(0.0..=50.0);
            OdQueue { od: p.od, demand, penalty: if active { weight } else { 0.0 }, paths: vec![p.clone()] }
        })
        .collect();
    let inst = build_spr(0, queues, &table);
    let r = solve_rounding(&inst, opts, INTEGRALITY_TOL)?;
    let (s_f, s_i) = (r.lower, r.upper);
    let gap = if s_i > 1e-9 { ((s_i - s_f) / s_i).max(0.0) } else { 0.0 };
    Ok(TrialOutcome {
        first_integral: r.first_integral,
        gap,
        columns: inst.paths.len(),
        rows: inst.rows.len(),
        rounds: r.rounds,
    })
}

pub fn summarize(outcomes: &[TrialOutcome]) -> IntegralitySummary {
    let trials = outcomes.len();
    let integral = outcomes.iter().filter(|o| o.first_integral).count();
    IntegralitySummary {
        trials,
        integral_rate: if trials == 0 { 1.0 } else { integral as f64 / trials as f64 },
        max_gap: outcomes.iter().map(|o| o.gap).fold(0.0, f64::max),
    }
}

/// Runs `trials` independent trials, trial `i` drawing from substream `i`
/// of `seed`.
pub fn monte_carlo_integrality(
    net: &GridNetwork,
    paths: &[TimedPath],
    trials: usize,
    seed: u64,
    opts: LpOptions,
) -> Result<(IntegralitySummary, Vec<TrialOutcome>), Error> {
    let outcomes = (0..trials)
        .map(|i| integrality_trial(net, paths, &mut substream(seed, "integrality", i as u64), opts))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((summarize(&outcomes), outcomes))
}
