//! File formats: results CSV, per-vehicle traces, instance dumps, speed
//! tables and network descriptions.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use rhythmic_core::grid::NetworkSpec;
use rhythmic_core::routing::RoutingInstance;
use rhythmic_core::sim::{MetricsReport, VehicleRecord};
use serde::{Deserialize, Serialize};

/// Column order of the results CSV.
pub const RESULT_COLUMNS: [&str; 13] = [
    "scenario",
    "demand_vph",
    "router",
    "t_hat",
    "avg_delay_s",
    "std_delay_s",
    "avg_speed_mps",
    "throughput",
    "mean_solve_ms",
    "p95_solve_ms",
    "controller",
    "seed",
    "generated",
];

/// One run of one controller. `t_hat` is empty for signal and reservation
/// benchmarks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scenario: u8,
    pub demand_vph: f64,
    pub router: String,
    pub t_hat: Option<f64>,
    pub avg_delay_s: f64,
    pub std_delay_s: f64,
    pub avg_speed_mps: f64,
    pub throughput: u64,
    pub mean_solve_ms: f64,
    pub p95_solve_ms: f64,
    pub controller: String,
    pub seed: u64,
    pub generated: u64,
}

impl ResultRow {
    pub fn new(scenario: u8, demand_vph: f64, controller: &str, router: &str, t_hat: Option<f64>, seed: u64, r: &MetricsReport) -> Self {
        Self {
            scenario,
            demand_vph,
            router: router.to_string(),
            t_hat,
            avg_delay_s: r.avg_delay_s,
            std_delay_s: r.std_delay_s,
            avg_speed_mps: r.avg_speed_mps,
            throughput: r.throughput,
            mean_solve_ms: r.mean_solve_ms,
            p95_solve_ms: r.p95_solve_ms,
            controller: controller.to_string(),
            seed,
            generated: r.generated,
        }
    }
}

/// Writes serializable rows with a header, even when there are none.
pub fn write_csv<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(BufWriter::new(file));
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_results(path: &Path, rows: &[ResultRow]) -> Result<()> {
    write_csv(path, &RESULT_COLUMNS, rows)
}

/// Reads a results CSV, rejecting files that lack any documented column.
pub fn read_results(path: &Path) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let headers = r.headers()?.clone();
    let missing: Vec<&str> = RESULT_COLUMNS.iter().copied().filter(|c| !headers.iter().any(|h| h == *c)).collect();
    if !missing.is_empty() {
        anyhow::bail!("{}: missing columns {}", path.display(), missing.join(", "));
    }
    let mut rows = Vec::new();
    for (i, rec) in r.deserialize().enumerate() {
        rows.push(rec.with_context(|| format!("{}: row {}", path.display(), i + 2))?);
    }
    Ok(rows)
}

/// One JSON object per vehicle and line.
pub fn write_trace(path: &Path, records: &[VehicleRecord]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace(path: &Path) -> Result<Vec<VehicleRecord>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .enumerate()
        .map(|(i, l)| serde_json::from_str(l).with_context(|| format!("{}:{}", path.display(), i + 1)))
        .collect()
}

pub fn write_instance(path: &Path, inst: &RoutingInstance) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    serde_json::to_writer_pretty(BufWriter::new(file), inst)?;
    Ok(())
}

pub fn read_instance(path: &Path) -> Result<RoutingInstance> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(serde_json::from_str(&text)?)
}

#[derive(Serialize, Deserialize)]
struct NetworkDoc {
    network: NetworkSpec,
}

/// Network description as a TOML document with a `[network]` table.
pub fn network_to_toml(spec: &NetworkSpec) -> Result<String> {
    Ok(toml::to_string(&NetworkDoc { network: spec.clone() })?)
}

pub fn network_from_toml(text: &str) -> Result<NetworkSpec> {
    Ok(toml::from_str::<NetworkDoc>(text)?.network)
}

/// Sampled `(t, v)` pair of a speed curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeedSample {
    pub street: usize,
    pub t: f64,
    pub v: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveSegmentRow {
    pub street: usize,
    pub segment: usize,
    pub length: f64,
    pub multiple: u32,
    pub start: f64,
    pub duration: f64,
    pub theta: f64,
    pub v_in: f64,
    pub v_out: f64,
}
