//! Versioned experiment configuration.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rhythmic_core::bench::{BenchConfig, Controller};
use rhythmic_core::demand::DemandScenario;
use rhythmic_core::grid::{NetworkSpec, OdSet};
use rhythmic_core::lp::LpOptions;
use rhythmic_core::rhythm::RhythmConfig;
use rhythmic_core::routing::RouterKind;
use rhythmic_core::sim::SimConfig;
use rhythmic_core::speed_curve::Kinematics;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

/// Presets bundled with the binary, by name.
pub const PRESETS: &[(&str, &str)] = &[
    ("table1", include_str!("../presets/table1.toml")),
    ("appendixB", include_str!("../presets/appendixB.toml")),
    ("scenario1_sweep", include_str!("../presets/scenario1_sweep.toml")),
    ("rhythm_sweep", include_str!("../presets/rhythm_sweep.toml")),
    ("speed_curves", include_str!("../presets/speed_curves.toml")),
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    /// Controllers × demands × rhythms × seeds on one network.
    Sweep,
    /// Average detour ratios over grid sizes.
    DetourTable,
    /// Three-path loop counts and Monte-Carlo integrality.
    Polyhedral,
    /// Variable speed curves for heterogeneous blocks.
    SpeedCurves,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ControllerId {
    #[serde(rename = "RC-SPR")]
    RcSpr,
    #[serde(rename = "RC-MPR")]
    RcMpr,
    #[serde(rename = "MP-1")]
    Mp1,
    #[serde(rename = "MP-R")]
    MpR,
    #[serde(rename = "FCFS-R")]
    FcfsR,
}

impl ControllerId {
    pub const ALL: [ControllerId; 5] =
        [ControllerId::RcSpr, ControllerId::RcMpr, ControllerId::Mp1, ControllerId::MpR, ControllerId::FcfsR];

    pub fn label(self) -> &'static str {
        match self {
            ControllerId::RcSpr => "RC-SPR",
            ControllerId::RcMpr => "RC-MPR",
            ControllerId::Mp1 => "MP-1",
            ControllerId::MpR => "MP-R",
            ControllerId::FcfsR => "FCFS-R",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.label() == s)
    }

    pub fn is_rhythmic(self) -> bool {
        matches!(self, ControllerId::RcSpr | ControllerId::RcMpr)
    }

    pub fn router(self) -> &'static str {
        match self {
            ControllerId::RcSpr => "spr",
            ControllerId::RcMpr => "mpr",
            ControllerId::Mp1 => "shortest",
            ControllerId::MpR | ControllerId::FcfsR => "adaptive",
        }
    }

    pub fn router_kind(self) -> Option<RouterKind> {
        match self {
            ControllerId::RcSpr => Some(RouterKind::Spr),
            ControllerId::RcMpr => Some(RouterKind::Mpr),
            _ => None,
        }
    }

    pub fn bench(self) -> Option<Controller> {
        match self {
            ControllerId::Mp1 => Some(Controller::Mp1),
            ControllerId::MpR => Some(Controller::MpR),
            ControllerId::FcfsR => Some(Controller::FcfsR),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    /// Horizontal streets.
    pub m: usize,
    /// Vertical streets.
    pub n: usize,
    #[serde(default = "default_block")]
    pub block_length: f64,
    /// Per-block lengths along a horizontal street; overrides `block_length`.
    #[serde(default)]
    pub block_lengths_h: Option<Vec<f64>>,
    #[serde(default)]
    pub block_lengths_v: Option<Vec<f64>>,
    #[serde(default)]
    pub approach_length: Option<f64>,
    #[serde(default = "default_lanes")]
    pub lanes: u32,
    #[serde(default = "default_junctions")]
    pub junctions_per_segment: usize,
}

fn default_block() -> f64 {
    150.0
}

fn default_lanes() -> u32 {
    2
}

fn default_junctions() -> usize {
    1
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            m: 6,
            n: 6,
            block_length: default_block(),
            block_lengths_h: None,
            block_lengths_v: None,
            approach_length: None,
            lanes: default_lanes(),
            junctions_per_segment: default_junctions(),
        }
    }
}

impl NetworkConfig {
    pub fn spec(&self) -> NetworkSpec {
        let mut s = NetworkSpec::homogeneous(self.m, self.n, self.block_length, self.lanes, self.junctions_per_segment);
        if let Some(h) = &self.block_lengths_h {
            s.block_lengths_h = h.clone();
        }
        if let Some(v) = &self.block_lengths_v {
            s.block_lengths_v = v.clone();
        }
        s.approach_length = self.approach_length;
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RhythmSection {
    /// Rhythm lengths t̂ to sweep, seconds.
    #[serde(default = "default_rhythms")]
    pub lengths: Vec<f64>,
    #[serde(default = "default_speed")]
    pub speed: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_headway")]
    pub headway: f64,
    #[serde(default = "default_buffer")]
    pub buffer_vehicles: u32,
    /// Platoon length as a share of the axis window β·t̂·v.
    #[serde(default = "default_fill")]
    pub platoon_fill: f64,
}

fn default_rhythms() -> Vec<f64> {
    vec![10.0]
}

fn default_speed() -> f64 {
    15.0
}

fn default_beta() -> f64 {
    0.5
}

fn default_headway() -> f64 {
    0.5
}

fn default_buffer() -> u32 {
    2
}

fn default_fill() -> f64 {
    1.0
}

impl Default for RhythmSection {
    fn default() -> Self {
        Self {
            lengths: default_rhythms(),
            speed: default_speed(),
            beta: default_beta(),
            headway: default_headway(),
            buffer_vehicles: default_buffer(),
            platoon_fill: default_fill(),
        }
    }
}

impl RhythmSection {
    pub fn config(&self, rhythm: f64) -> RhythmConfig {
        let mut c = RhythmConfig::balanced(rhythm, self.speed);
        c.beta = self.beta;
        c.headway = self.headway;
        c.buffer_vehicles = self.buffer_vehicles;
        c.platoon_length = self.platoon_fill * self.beta * rhythm * self.speed;
        c.platoon_length_vertical = Some(self.platoon_fill * (1.0 - self.beta) * rhythm * self.speed);
        c
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    /// Scenario 1–6.
    pub id: u8,
    /// Total demand levels, vehicles per hour.
    pub demands_vph: Vec<f64>,
    #[serde(default)]
    pub straight_share: Option<f64>,
    #[serde(default)]
    pub entrance_weight: Option<f64>,
    #[serde(default)]
    pub junction_weight: Option<f64>,
}

impl ScenarioSection {
    pub fn scenario(&self, vph: f64) -> Result<DemandScenario> {
        let mut s = DemandScenario::preset(self.id, vph)?;
        if let Some(x) = self.straight_share {
            s.straight_share = x;
        }
        if let Some(x) = self.entrance_weight {
            s.entrance_weight = x;
        }
        if let Some(x) = self.junction_weight {
            s.junction_weight = x;
        }
        s.validate()?;
        Ok(s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_horizon")]
    pub drain: f64,
    /// MPR detour budget over the shortest route, seconds.
    #[serde(default = "default_budget")]
    pub detour_budget: f64,
    #[serde(default = "default_max_routes")]
    pub max_routes: usize,
    #[serde(default)]
    pub lp: Option<LpOptions>,
    /// Wall-clock solve timing; the timing columns are zero without it.
    #[serde(default)]
    pub timing: bool,
}

fn default_horizon() -> f64 {
    1800.0
}

fn default_budget() -> f64 {
    40.0
}

fn default_max_routes() -> usize {
    32
}

impl Default for SimSection {
    fn default() -> Self {
        Self {
            horizon: default_horizon(),
            drain: default_horizon(),
            detour_budget: default_budget(),
            max_routes: default_max_routes(),
            lp: None,
            timing: false,
        }
    }
}

impl SimSection {
    pub fn sim(&self, router: RouterKind, seed: u64) -> SimConfig {
        SimConfig {
            router,
            horizon: self.horizon,
            drain: self.drain,
            detour_budget: self.detour_budget,
            max_routes: self.max_routes,
            seed,
            lp: self.lp,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchSection {
    #[serde(default = "default_slot")]
    pub slot: f64,
    #[serde(default = "default_saturation")]
    pub saturation: f64,
    #[serde(default = "default_occupancy")]
    pub occupancy: f64,
    /// Jam spacing in meters; 0 means unlimited storage.
    #[serde(default = "default_jam")]
    pub jam_spacing: f64,
    #[serde(default = "default_tick")]
    pub tick: f64,
}

fn default_slot() -> f64 {
    5.0
}

fn default_saturation() -> f64 {
    2.0
}

fn default_occupancy() -> f64 {
    1.0
}

fn default_jam() -> f64 {
    7.5
}

fn default_tick() -> f64 {
    1.0
}

impl Default for BenchSection {
    fn default() -> Self {
        Self {
            slot: default_slot(),
            saturation: default_saturation(),
            occupancy: default_occupancy(),
            jam_spacing: default_jam(),
            tick: default_tick(),
        }
    }
}

impl BenchSection {
    pub fn config(&self, controller: Controller, sim: &SimSection, speed: f64, seed: u64) -> BenchConfig {
        BenchConfig {
            controller,
            horizon: sim.horizon,
            drain: sim.drain,
            slot: self.slot,
            saturation: self.saturation,
            occupancy: self.occupancy,
            jam_spacing: (self.jam_spacing > 0.0).then_some(self.jam_spacing),
            speed,
            tick: self.tick,
            seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetourSection {
    /// Grid sizes for both m and n.
    pub sizes: Vec<usize>,
    #[serde(default = "default_od_sets")]
    pub od_sets: Vec<OdSet>,
}

fn default_od_sets() -> Vec<OdSet> {
    vec![OdSet::Crossroads, OdSet::EntranceExit]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolyhedralSection {
    /// Square grid sizes for loop enumeration.
    #[serde(default)]
    pub loop_sizes: Vec<usize>,
    /// Grid size for the Monte-Carlo integrality study; 0 skips it.
    #[serde(default)]
    pub trial_size: usize,
    #[serde(default)]
    pub trials: usize,
    /// Routing interval whose platoons the fixed paths board.
    #[serde(default = "default_interval")]
    pub interval: i64,
}

fn default_interval() -> i64 {
    20
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeedCurveSection {
    pub v_max: f64,
    pub accel: f64,
    pub decel: f64,
    pub v_min_cross: f64,
    /// Sampling step of the exported tables, seconds.
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Horizon over which the chained schedule is checked, seconds.
    #[serde(default = "default_check")]
    pub check_horizon: f64,
}

fn default_dt() -> f64 {
    0.1
}

fn default_check() -> f64 {
    600.0
}

impl SpeedCurveSection {
    pub fn kinematics(&self) -> Kinematics {
        Kinematics::new(self.v_max, self.accel, self.decel, self.v_min_cross)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_results")]
    pub results: PathBuf,
    /// Write one line-delimited trace per run.
    #[serde(default)]
    pub traces: bool,
    /// Dump the routing program solved in this interval of every RC run.
    #[serde(default)]
    pub instance_interval: Option<i64>,
}

fn default_results() -> PathBuf {
    PathBuf::from("results.csv")
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { results: default_results(), traces: false, instance_interval: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    pub suite: Suite,
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub network: NetworkConfig,
    #[serde(default)]
    pub rhythm: RhythmSection,
    #[serde(default)]
    pub scenario: Option<ScenarioSection>,
    #[serde(default)]
    pub controllers: Vec<String>,
    #[serde(default)]
    pub sim: SimSection,
    #[serde(default)]
    pub bench: BenchSection,
    #[serde(default)]
    pub detour: Option<DetourSection>,
    #[serde(default)]
    pub polyhedral: Option<PolyhedralSection>,
    #[serde(default)]
    pub speed_curves: Option<SpeedCurveSection>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub output: OutputSection,
}

fn default_seeds() -> Vec<u64> {
    vec![1]
}

impl ExperimentConfig {
    /// Parses and validates a TOML document; errors carry line and column.
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| {
            let at = e.span().map(|s| line_col(text, s.start));
            match at {
                Some((l, c)) => anyhow::anyhow!("{origin}:{l}:{c}: {}", e.message()),
                None => anyhow::anyhow!("{origin}: {}", e.message()),
            }
        })?;
        cfg.validate().with_context(|| format!("{origin}: invalid configuration"))?;
        Ok(cfg)
    }

    /// Reads a config file, or a bundled preset when `path` names one.
    pub fn load(path: &Path) -> Result<Self> {
        let key = path.to_string_lossy();
        if let Some((name, text)) = PRESETS.iter().find(|(n, _)| *n == key) {
            return Self::parse(text, &format!("preset {name}"));
        }
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn controller_ids(&self) -> Result<Vec<ControllerId>> {
        self.controllers
            .iter()
            .map(|c| ControllerId::parse(c).with_context(|| format!("unknown controller {c:?}; expected one of RC-SPR, RC-MPR, MP-1, MP-R, FCFS-R")))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != SCHEMA_VERSION {
            bail!("unsupported schema version {} (expected {SCHEMA_VERSION})", self.version);
        }
        if self.seeds.is_empty() {
            bail!("seeds must not be empty");
        }
        match self.suite {
            Suite::Sweep => {
                let Some(s) = &self.scenario else { bail!("sweep needs a [scenario] table") };
                if !(1..=6).contains(&s.id) {
                    bail!("scenario id {} not in 1..=6", s.id);
                }
                if s.demands_vph.is_empty() {
                    bail!("scenario.demands_vph must not be empty");
                }
                if self.controllers.is_empty() {
                    bail!("sweep needs at least one controller");
                }
                self.controller_ids()?;
                if self.rhythm.lengths.is_empty() {
                    bail!("rhythm.lengths must not be empty");
                }
                s.scenario(0.0)?;
            }
            Suite::DetourTable => {
                let Some(d) = &self.detour else { bail!("detour_table needs a [detour] table") };
                if d.sizes.is_empty() || d.od_sets.is_empty() {
                    bail!("detour.sizes and detour.od_sets must not be empty");
                }
            }
            Suite::Polyhedral => {
                if self.polyhedral.is_none() {
                    bail!("polyhedral needs a [polyhedral] table");
                }
            }
            Suite::SpeedCurves => {
                if self.speed_curves.is_none() {
                    bail!("speed_curves needs a [speed_curves] table");
                }
            }
        }
        Ok(())
    }
}

/// 1-based line and column of a byte offset.
pub fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |s| s.chars().count()) + 1;
    (line, col)
}
