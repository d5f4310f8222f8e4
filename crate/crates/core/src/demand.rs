//! Demand scenarios: per-OD Poisson arrival rates at entrances and
//! junctions with straight/turning mixes and optional fluctuation.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::grid::{od_pairs, GridNetwork, NodeKind, OdPair, OdSet};
use crate::rng::substream;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fluctuation {
    /// Period of the sinusoidal multiplier, seconds.
    pub period: f64,
    /// Multiplier range is `[1 − amplitude, 1 + amplitude]`.
    pub amplitude: f64,
}

impl Fluctuation {
    pub fn multiplier(&self, t: f64) -> f64 {
        1.0 + self.amplitude * libm::sin(2.0 * core::f64::consts::PI * t / self.period)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemandScenario {
    pub id: u8,
    /// Total demand over all ODs, vehicles per hour.
    pub total_vph: f64,
    /// Share of each origin's demand bound for destinations further down
    /// its own street.
    pub straight_share: f64,
    #[serde(default)]
    pub fluctuation: Option<Fluctuation>,
    /// Relative demand weight of an entrance.
    #[serde(default = "one")]
    pub entrance_weight: f64,
    /// Relative demand weight of a junction.
    #[serde(default)]
    pub junction_weight: f64,
}

fn one() -> f64 {
    1.0
}

impl DemandScenario {
    /// Scenarios 1–3 are stable with straight shares 0.8 / 0.5 / 0.2;
    /// 4–6 repeat them with a ±50% sinusoidal multiplier of 10 min period.
    /// Demand originates at entrances; junctions only receive it.
    pub fn preset(id: u8, total_vph: f64) -> Result<Self, Error> {
        let straight_share = match id {
            1 | 4 => 0.8,
            2 | 5 => 0.5,
            3 | 6 => 0.2,
            _ => return Err(Error::InvalidScenario(format!("scenario id {id} not in 1..=6"))),
        };
        let fluctuation = (id >= 4).then_some(Fluctuation { period: 600.0, amplitude: 0.5 });
        Ok(Self { id, total_vph, straight_share, fluctuation, entrance_weight: 1.0, junction_weight: 0.0 })
    }

    pub fn validate(&self) -> Result<(), Error> {
        let bad = |m: &str| Err(Error::InvalidScenario(format!("{m} in scenario {}", self.id)));
        if !(self.total_vph >= 0.0) || !self.total_vph.is_finite() {
            return bad("demand must be finite and non-negative");
        }
        if !(0.0..=1.0).contains(&self.straight_share) {
            return bad("straight share outside [0, 1]");
        }
        if !(self.entrance_weight >= 0.0) || !(self.junction_weight >= 0.0) {
            return bad("negative origin weight");
        }
        if let Some(f) = self.fluctuation {
            if !(f.period > 0.0) || !(0.0..=1.0).contains(&f.amplitude) {
                return bad("fluctuation needs a positive period and amplitude in [0, 1]");
            }
        }
        Ok(())
    }

    pub fn multiplier(&self, t: f64) -> f64 {
        self.fluctuation.map_or(1.0, |f| f.multiplier(t))
    }
}

/// Base demand rate of one OD.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OdRate {
    pub od: OdPair,
    pub vph: f64,
    pub straight: bool,
}

/// Whether `d` lies downstream of `o` on the same street.
pub fn is_straight(net: &GridNetwork, od: OdPair) -> bool {
    match (net.street_of(od.origin), net.street_of(od.destination)) {
        (Some(a), Some(b)) if a == b => {
            let po = net.street_position(od.origin).unwrap_or(0.0);
            let pd = net.street_position(od.destination).unwrap_or(0.0);
            pd > po
        }
        _ => false,
    }
}

/// Splits the scenario's total demand over the entrance/junction OD set.
pub fn od_rates(net: &GridNetwork, scn: &DemandScenario) -> Result<Vec<OdRate>, Error> {
    scn.validate()?;
    let ods = od_pairs(net, OdSet::Terminals);
    let weight = |n: usize| match net.nodes[n].kind {
        NodeKind::Entrance { .. } => scn.entrance_weight,
        NodeKind::Junction { .. } => scn.junction_weight,
        _ => 0.0,
    };
    let mut origins: Vec<usize> = ods.iter().map(|o| o.origin).collect();
    origins.sort_unstable();
    origins.dedup();
    let total_w: f64 = origins.iter().map(|&o| weight(o)).sum();
    let mut out = Vec::with_capacity(ods.len());
    for &o in &origins {
        let share = if total_w > 0.0 { scn.total_vph * weight(o) / total_w } else { 0.0 };
        let mine: Vec<(OdPair, bool)> = ods.iter().filter(|p| p.origin == o).map(|&p| (p, is_straight(net, p))).collect();
        let n_straight = mine.iter().filter(|x| x.1).count();
        let n_turn = mine.len() - n_straight;
        // An origin with only one class sends its whole share there.
        let (s_share, t_share) = match (n_straight, n_turn) {
            (0, _) => (0.0, 1.0),
            (_, 0) => (1.0, 0.0),
            _ => (scn.straight_share, 1.0 - scn.straight_share),
        };
        for (od, straight) in mine {
            let vph = if straight {
                share * s_share / n_straight as f64
            } else {
                share * t_share / n_turn as f64
            };
            out.push(OdRate { od, vph, straight });
        }
    }
    Ok(out)
}

/// One vehicle appearing at its origin.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Arrival {
    /// Index into the OD rate table.
    pub od: usize,
    pub time: f64,
}

/// Vehicles appearing during `[k·dt, (k+1)·dt)`, drawn from substream
/// `("arrivals", k)` so every controller sees the same stream. Counts are
/// Poisson at the rate in effect at the window start; times are uniform
/// inside the window. Sorted by time, then OD.
pub fn generate_arrivals(rates: &[OdRate], scn: &DemandScenario, k: u64, dt: f64, seed: u64) -> Vec<Arrival> {
    let mut rng = substream(seed, "arrivals", k);
    let t0 = k as f64 * dt;
    let mult = scn.multiplier(t0);
    let mut out = Vec::new();
    for (i, r) in rates.iter().enumerate() {
        let lambda = r.vph * mult * dt / 3600.0;
        if lambda <= 0.0 {
            continue;
        }
        let n = Poisson::new(lambda).map(|p| p.sample(&mut rng) as u64).unwrap_or(0);
        for _ in 0..n {
            out.push(Arrival { od: i, time: t0 + rng.gen::<f64>() * dt });
        }
    }
    out.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.od.cmp(&b.od)));
    out
}
