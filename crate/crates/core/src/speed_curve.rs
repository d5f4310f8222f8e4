//! Speed-curve generation for streets whose blocks are not an integer number
//! of rhythms at cruise speed: each crossroads-to-crossroads segment gets a
//! piecewise-linear speed profile lasting exactly an integer multiple of t̂.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::grid::GridNetwork;
use crate::rhythm::{crossroads_offsets, EntrySchedule, Occupancy, RhythmConfig};

/// Tolerance on the distance covered by a constructed segment, in meters.
pub const DISTANCE_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Kinematics {
    pub v_max: f64,
    /// Maximum acceleration c_max (m/s²).
    pub accel: f64,
    /// Maximum deceleration d_max (m/s²).
    pub decel: f64,
    /// Minimum speed when passing a crossroads.
    pub v_min_cross: f64,
}

impl Kinematics {
    pub fn new(v_max: f64, accel: f64, decel: f64, v_min_cross: f64) -> Self {
        Self { v_max, accel, decel, v_min_cross }
    }

    /// Smallest rhythm for which a curve always exists.
    pub fn min_rhythm(&self) -> f64 {
        self.v_max / self.decel + self.v_min_cross / self.accel
    }

    /// Shortest segment for which a curve always exists.
    pub fn min_length(&self) -> f64 {
        self.v_max * self.v_max / (2.0 * self.decel) + self.v_min_cross * self.v_min_cross / (2.0 * self.accel)
    }

    fn check(&self) -> Result<(), Error> {
        let ok = self.v_max > 0.0 && self.accel > 0.0 && self.decel > 0.0;
        if ok && self.v_min_cross >= 0.0 && self.v_min_cross <= self.v_max {
            Ok(())
        } else {
            Err(Error::SpeedCurve(format!("invalid kinematics {self:?}")))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeedCurveSpec {
    pub kinematics: Kinematics,
    /// Segment lengths in travel order.
    pub segments: Vec<f64>,
    /// Speed at the start of the first segment.
    pub v0: f64,
    pub rhythm: f64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Feasibility {
    pub rhythm_ok: bool,
    pub segments_ok: Vec<bool>,
}

impl Feasibility {
    pub fn all(&self) -> bool {
        self.rhythm_ok && self.segments_ok.iter().all(|&b| b)
    }
}

/// Both existence conditions, boundaries inclusive up to rounding of the
/// inputs.
pub fn feasibility_check(spec: &SpeedCurveSpec) -> Feasibility {
    let k = &spec.kinematics;
    let slack = |x: f64| 1e-9 * (1.0 + libm::fabs(x));
    let min_len = k.min_length();
    Feasibility {
        rhythm_ok: spec.rhythm + slack(spec.rhythm) >= k.min_rhythm(),
        segments_ok: spec.segments.iter().map(|&l| l + slack(l) >= min_len).collect(),
    }
}

/// Farthest distance reachable in `a` rhythms starting at `v_prev`:
/// accelerate at c_max up to v_max, then cruise.
pub fn l_max(k: &Kinematics, v_prev: f64, a: u32, rhythm: f64) -> f64 {
    let t = a as f64 * rhythm;
    let ramp = (k.v_max - v_prev).max(0.0) / k.accel;
    if t <= ramp {
        v_prev * t + 0.5 * k.accel * t * t
    } else {
        (k.v_max * k.v_max - v_prev * v_prev) / (2.0 * k.accel) + k.v_max * (t - ramp)
    }
}

/// Least `a ≥ 1` with `l_max(a) ≥ length`.
pub fn min_integer_travel(k: &Kinematics, v_prev: f64, length: f64, rhythm: f64) -> Result<u32, Error> {
    k.check()?;
    if !(rhythm > 0.0) || !(length >= 0.0) || !(v_prev >= 0.0) {
        return Err(Error::SpeedCurve(format!("bad segment: length {length}, v {v_prev}, rhythm {rhythm}")));
    }
    // Cruising at v_max bounds the answer from above.
    let bound = libm::ceil(length / (k.v_max * rhythm)) as u32 + libm::ceil(k.v_max / (k.accel * rhythm)) as u32 + 1;
    (1..=bound.max(1))
        .find(|&a| l_max(k, v_prev, a, rhythm) >= length)
        .ok_or_else(|| Error::SpeedCurve(format!("no integer travel time for {length} m")))
}

/// A line v = intercept + slope·t.
type Line = (f64, f64);

fn envelope(lines: &[Line], upper: bool, duration: f64) -> Vec<(f64, f64)> {
    let mut ts = vec![0.0, duration];
    for (i, a) in lines.iter().enumerate() {
        for b in &lines[i + 1..] {
            if a.1 != b.1 {
                let t = (b.0 - a.0) / (a.1 - b.1);
                if t > 0.0 && t < duration {
                    ts.push(t);
                }
            }
        }
    }
    ts.sort_by(f64::total_cmp);
    ts.dedup_by(|a, b| libm::fabs(*a - *b) <= 1e-12);
    let eval = |t: f64| {
        let vals = lines.iter().map(|l| l.0 + l.1 * t);
        if upper {
            vals.fold(f64::NEG_INFINITY, f64::max)
        } else {
            vals.fold(f64::INFINITY, f64::min)
        }
    };
    ts.into_iter().map(|t| (t, eval(t))).collect()
}

/// Knots `(t, v)` of the profile v(t; θ) on `[0, duration]`: a brake /
/// hold / accelerate envelope for θ ≤ v_prev, accelerate-and-hold above.
pub fn profile(k: &Kinematics, v_prev: f64, theta: f64, duration: f64) -> Vec<(f64, f64)> {
    if theta <= v_prev {
        let lines = [
            (v_prev, -k.decel),
            (theta, 0.0),
            (k.v_min_cross - k.accel * duration, k.accel),
        ];
        envelope(&lines, true, duration)
    } else {
        envelope(&[(v_prev, k.accel), (theta, 0.0)], false, duration)
    }
}

/// Area under a piecewise-linear profile.
pub fn knots_distance(knots: &[(f64, f64)]) -> f64 {
    knots.windows(2).map(|w| 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0)).sum()
}

/// D(θ): distance covered by the profile in `duration`.
pub fn profile_distance(k: &Kinematics, v_prev: f64, theta: f64, duration: f64) -> f64 {
    knots_distance(&profile(k, v_prev, theta, duration))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveSegment {
    /// Time the segment starts, relative to the curve start.
    pub start: f64,
    pub multiple: u32,
    pub duration: f64,
    pub length: f64,
    pub theta: f64,
    pub v_in: f64,
    pub v_out: f64,
    /// Knots with times relative to `start`.
    pub knots: Vec<(f64, f64)>,
}

impl CurveSegment {
    pub fn speed_at(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, self.duration);
        let i = self.knots.partition_point(|&(kt, _)| kt <= t).clamp(1, self.knots.len() - 1);
        let (t0, v0) = self.knots[i - 1];
        let (t1, v1) = self.knots[i];
        if t1 > t0 {
            v0 + (v1 - v0) * (t - t0) / (t1 - t0)
        } else {
            v1
        }
    }

    pub fn distance(&self) -> f64 {
        knots_distance(&self.knots)
    }
}

/// Solves for θ* with D(θ*) = length by bisection and materializes the
/// segment.
pub fn construct_segment(k: &Kinematics, v_prev: f64, length: f64, multiple: u32, rhythm: f64) -> Result<CurveSegment, Error> {
    k.check()?;
    let duration = multiple as f64 * rhythm;
    let d = |th: f64| profile_distance(k, v_prev, th, duration);
    let (mut lo, mut hi) = (0.0, k.v_max);
    if d(lo) > length + DISTANCE_TOL || d(hi) < length - DISTANCE_TOL {
        return Err(Error::SpeedCurve(format!(
            "segment of {length} m not bracketed: D(0) = {}, D(v_max) = {}",
            d(lo),
            d(hi)
        )));
    }
    let mut theta = if libm::fabs(d(hi) - length) <= DISTANCE_TOL { hi } else { lo };
    if libm::fabs(d(theta) - length) > DISTANCE_TOL {
        for _ in 0..200 {
            theta = 0.5 * (lo + hi);
            let err = d(theta) - length;
            if libm::fabs(err) <= DISTANCE_TOL {
                break;
            }
            if err < 0.0 {
                lo = theta;
            } else {
                hi = theta;
            }
        }
    }
    let knots = profile(k, v_prev, theta, duration);
    let v_out = knots.last().map_or(v_prev, |&(_, v)| v);
    Ok(CurveSegment { start: 0.0, multiple, duration, length, theta, v_in: v_prev, v_out, knots })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeedCurve {
    pub rhythm: f64,
    pub segments: Vec<CurveSegment>,
}

impl SpeedCurve {
    /// Times at which each segment ends, i.e. the crossroads arrivals.
    pub fn arrivals(&self) -> Vec<f64> {
        self.segments.iter().map(|s| s.start + s.duration).collect()
    }

    pub fn duration(&self) -> f64 {
        self.segments.last().map_or(0.0, |s| s.start + s.duration)
    }

    pub fn speed_at(&self, t: f64) -> f64 {
        let i = self.segments.partition_point(|s| s.start + s.duration < t).min(self.segments.len().saturating_sub(1));
        self.segments.get(i).map_or(0.0, |s| s.speed_at(t - s.start))
    }

    /// Speed sampled every `dt` seconds, end point included.
    pub fn sample(&self, dt: f64) -> Vec<(f64, f64)> {
        let total = self.duration();
        if !(dt > 0.0) {
            return Vec::new();
        }
        let steps = libm::ceil(total / dt - 1e-9) as usize;
        (0..=steps)
            .map(|i| {
                let t = (i as f64 * dt).min(total);
                (t, self.speed_at(t))
            })
            .collect()
    }
}

/// Runs the generation procedure over every segment of `spec`.
pub fn generate(spec: &SpeedCurveSpec) -> Result<SpeedCurve, Error> {
    let k = &spec.kinematics;
    k.check()?;
    if spec.v0 < k.v_min_cross || spec.v0 > k.v_max {
        return Err(Error::SpeedCurve(format!("initial speed {} outside [{}, {}]", spec.v0, k.v_min_cross, k.v_max)));
    }
    let mut v = spec.v0;
    let mut elapsed: u64 = 0;
    let mut segments = Vec::with_capacity(spec.segments.len());
    for &length in &spec.segments {
        let a = min_integer_travel(k, v, length, spec.rhythm)?;
        let mut seg = construct_segment(k, v, length, a, spec.rhythm)?;
        seg.start = elapsed as f64 * spec.rhythm;
        elapsed += a as u64;
        v = seg.v_out;
        segments.push(seg);
    }
    Ok(SpeedCurve { rhythm: spec.rhythm, segments })
}

/// Entrance-to-crossroads segment lengths of a street, in travel order.
pub fn street_segments(net: &GridNetwork, street: usize) -> Vec<f64> {
    let offs = crossroads_offsets(net, street);
    let mut prev = 0.0;
    offs.iter()
        .map(|&(_, d)| {
            let l = d - prev;
            prev = d;
            l
        })
        .collect()
}

/// One curve per street, each starting at its entrance at speed `v0`.
pub fn street_curves(net: &GridNetwork, k: &Kinematics, v0: f64, rhythm: f64) -> Result<Vec<SpeedCurve>, Error> {
    (0..net.streets.len())
        .map(|s| generate(&SpeedCurveSpec { kinematics: *k, segments: street_segments(net, s), v0, rhythm }))
        .collect()
}

/// Crossroads occupancy windows when platoons follow `curves`. Every
/// vehicle of a platoon runs the same curve, so the passage at each
/// crossroads lasts as long as the platoon needs to enter at the cruise
/// speed of `cfg`.
pub fn curve_occupancies(
    cfg: &RhythmConfig,
    net: &GridNetwork,
    schedule: &EntrySchedule,
    curves: &[SpeedCurve],
    horizon: f64,
) -> Vec<Occupancy> {
    let mut out = Vec::new();
    for (s, street) in net.streets.iter().enumerate() {
        let dwell = cfg.platoon_length_for(street.axis) / cfg.speed;
        let nodes = crossroads_offsets(net, s);
        let arrivals = curves[s].arrivals();
        for &entry in &schedule.epochs[s] {
            for (&(node, _), &at) in nodes.iter().zip(&arrivals) {
                let start = entry + at;
                if start < horizon {
                    out.push(Occupancy { node, axis: street.axis, street: s, start, end: start + dwell });
                }
            }
        }
    }
    out
}
