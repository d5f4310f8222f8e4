use rhythmic::config::ExperimentConfig;
use rhythmic::experiment::run_experiment;
use rhythmic::output::read_results;
use rhythmic::plotdata::{self, PLOT_COLUMNS};

const SWEEP: &str = r#"
version = 1
suite = "sweep"
name = "small"
controllers = ["RC-SPR", "MP-R", "FCFS-R"]
seeds = [1, 2]

[network]
m = 2
n = 2

[rhythm]
lengths = [5.0, 10.0]

[scenario]
id = 1
demands_vph = [2000.0, 4000.0]

[sim]
horizon = 300.0
drain = 300.0

[output]
traces = true
instance_interval = 5
"#;

fn small() -> ExperimentConfig {
    ExperimentConfig::parse(SWEEP, "small.toml").unwrap()
}

#[test]
fn sweep_writes_rows_traces_and_instances() {
    let dir = tempfile::tempdir().unwrap();
    let s = run_experiment(&small(), dir.path(), Some(2), None).unwrap();
    // 2 demands x 2 seeds x (2 rhythm lengths + 2 benchmarks).
    assert_eq!(s.rows, 16);
    let rows = read_results(&s.results).unwrap();
    assert_eq!(rows.len(), 16);
    assert!(rows.iter().all(|r| (r.controller == "RC-SPR") == r.t_hat.is_some()));
    assert!(rows.iter().all(|r| r.mean_solve_ms == 0.0));
    assert!(dir.path().join("network.toml").exists());
    assert_eq!(std::fs::read_dir(dir.path().join("traces")).unwrap().count(), 16);
    assert_eq!(std::fs::read_dir(dir.path().join("instances")).unwrap().count(), 8);
}

#[test]
fn runs_are_byte_identical_across_thread_counts() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ra = run_experiment(&small(), a.path(), Some(1), None).unwrap();
    let rb = run_experiment(&small(), b.path(), Some(3), None).unwrap();
    assert_eq!(std::fs::read(ra.results).unwrap(), std::fs::read(rb.results).unwrap());
}

#[test]
fn seed_override_replaces_the_seed_list() {
    let dir = tempfile::tempdir().unwrap();
    let s = run_experiment(&small(), dir.path(), None, Some(7)).unwrap();
    let rows = read_results(&s.results).unwrap();
    assert_eq!(rows.len(), 8);
    assert!(rows.iter().all(|r| r.seed == 7));
}

#[test]
fn plot_series_follow_controllers_and_rhythm_lengths() {
    let dir = tempfile::tempdir().unwrap();
    let s = run_experiment(&small(), dir.path(), None, None).unwrap();
    let rows = read_results(&s.results).unwrap();
    let pts = plotdata::points(&rows, "delay").unwrap();
    let mut series: Vec<&str> = pts.iter().map(|p| p.series.as_str()).collect();
    series.sort_unstable();
    series.dedup();
    assert_eq!(series, ["FCFS-R", "MP-R", "RC-SPR t_hat=10", "RC-SPR t_hat=5"]);
    // Two seeds averaged into one point per series and demand.
    assert_eq!(pts.len(), 8);
}

#[test]
fn plotdata_of_empty_results_writes_headers_only() {
    let dir = tempfile::tempdir().unwrap();
    let results = dir.path().join("empty.csv");
    rhythmic::output::write_results(&results, &[]).unwrap();
    let files = plotdata::emit(&results, "all", &dir.path().join("plots")).unwrap();
    assert_eq!(files.len(), plotdata::FIGURES.len());
    for f in files {
        assert_eq!(std::fs::read_to_string(f).unwrap().trim_end(), PLOT_COLUMNS.join(","));
    }
}

#[test]
fn unknown_figure_is_rejected() {
    assert!(plotdata::points(&[], "latency").is_err());
}

#[test]
fn detour_suite_writes_one_row_per_size_and_set() {
    let text = r#"
version = 1
suite = "detour_table"
name = "d"

[network]
m = 2
n = 2
junctions_per_segment = 0

[detour]
sizes = [2, 4]
od_sets = ["crossroads", "entrance_exit"]

[output]
results = "detour.csv"
"#;
    let dir = tempfile::tempdir().unwrap();
    let s = run_experiment(&ExperimentConfig::parse(text, "d.toml").unwrap(), dir.path(), None, None).unwrap();
    assert_eq!(s.rows, 8);
    assert_eq!(std::fs::read_to_string(s.results).unwrap().lines().count(), 9);
}

#[test]
fn speed_curve_preset_writes_samples_and_segments() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::load(std::path::Path::new("speed_curves")).unwrap();
    let s = run_experiment(&cfg, dir.path(), None, None).unwrap();
    assert!(s.rows > 0);
    let text = std::fs::read_to_string(&s.results).unwrap();
    assert_eq!(text.lines().next().unwrap(), "street,t,v");
    assert!(dir.path().join("curve_segments.csv").exists());
}
