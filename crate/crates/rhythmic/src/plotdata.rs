//! Long-format plot tables derived from a results CSV.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use anyhow::{bail, Result};
use serde::Serialize;

use crate::output::{self, ResultRow};

pub const FIGURES: [&str; 5] = ["delay", "std_delay", "speed", "throughput", "solve_ms"];

pub const PLOT_COLUMNS: [&str; 5] = ["figure", "scenario", "series", "x", "y"];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlotPoint {
    pub figure: String,
    pub scenario: u8,
    pub series: String,
    /// Total demand, vehicles per hour.
    pub x: f64,
    /// Metric averaged over seeds.
    pub y: f64,
}

fn metric(figure: &str, r: &ResultRow) -> f64 {
    match figure {
        "delay" => r.avg_delay_s,
        "std_delay" => r.std_delay_s,
        "speed" => r.avg_speed_mps,
        "throughput" => r.throughput as f64,
        _ => r.mean_solve_ms,
    }
}

fn short(t: f64) -> String {
    format!("{}", (t * 100.0).round() / 100.0)
}

/// Points of one figure: one series per controller, split by t̂ when a
/// controller ran with several rhythm lengths.
pub fn points(rows: &[ResultRow], figure: &str) -> Result<Vec<PlotPoint>> {
    if !FIGURES.contains(&figure) {
        bail!("unknown figure {figure:?}; expected one of {}", FIGURES.join(", "));
    }
    let mut rhythms: BTreeMap<&str, BTreeSet<u64>> = BTreeMap::new();
    for r in rows {
        if let Some(t) = r.t_hat {
            rhythms.entry(&r.controller).or_default().insert(t.to_bits());
        }
    }
    let mut acc: BTreeMap<(u8, String, u64), (f64, usize)> = BTreeMap::new();
    for r in rows {
        let split = rhythms.get(r.controller.as_str()).map_or(false, |s| s.len() > 1);
        let series = match r.t_hat {
            Some(t) if split => format!("{} t_hat={}", r.controller, short(t)),
            _ => r.controller.clone(),
        };
        let e = acc.entry((r.scenario, series, r.demand_vph.to_bits())).or_insert((0.0, 0));
        e.0 += metric(figure, r);
        e.1 += 1;
    }
    Ok(acc
        .into_iter()
        .map(|((scenario, series, x), (sum, n))| PlotPoint {
            figure: figure.to_string(),
            scenario,
            series,
            x: f64::from_bits(x),
            y: sum / n as f64,
        })
        .collect())
}

/// Writes `plot_<figure>.csv` under `out` for one figure or, with "all",
/// for every figure.
pub fn emit(results: &Path, figure: &str, out: &Path) -> Result<Vec<PathBuf>> {
    let rows = output::read_results(results)?;
    std::fs::create_dir_all(out)?;
    let figures: Vec<&str> = if figure == "all" { FIGURES.to_vec() } else { vec![figure] };
    let mut written = Vec::new();
    for f in figures {
        let pts = points(&rows, f)?;
        let path = out.join(format!("plot_{f}.csv"));
        output::write_csv(&path, &PLOT_COLUMNS, &pts)?;
        written.push(path);
    }
    Ok(written)
}
