//! Stowage environments.
//!
//! All three formulations share the [`Environment`] trait: a flat `f64` observation, a
//! boolean action mask of fixed length, and a step function. Training code drives
//! every variant through the trait; the concrete types expose formulation-specific
//! queries (crane states, active agent, per-episode shifters).

mod multicrane;
mod spge;

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::grid::GridState;
use crate::scenario::{ProblemInstance, ScenarioSpec};

pub use multicrane::{ClockedState, CompositeAction, CraneState, SpaecEnv, SpgeMcEnv};
pub use spge::SpgeEnv;

/// Fields per slot record: bay, row, tier, occupancy, group.
pub const SLOT_FEATURES: usize = 5;
/// Target descriptor: flat id, bay, row, tier, occupancy, required group.
pub const TARGET_FEATURES: usize = 6;

/// Operation durations of the clocked simulation, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeModel {
    pub load: f64,
    pub shift: f64,
}

impl Default for TimeModel {
    fn default() -> Self {
        Self {
            load: 60.0,
            shift: 50.0,
        }
    }
}

impl TimeModel {
    pub fn validate(&self) -> Result<()> {
        if self.load > 0.0 && self.shift > 0.0 {
            Ok(())
        } else {
            Err(ModelError::InvalidScenario(format!(
                "time model durations must be positive, got load {} shift {}",
                self.load, self.shift
            )))
        }
    }

    #[inline]
    pub fn duration(&self, shifters: usize) -> f64 {
        self.load + shifters as f64 * self.shift
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnvConfig {
    /// Magnitude of the negative reward given to an invalid action.
    pub invalid_penalty: f64,
    /// Min-max scale every observation feature into `[0, 1]`.
    pub normalize: bool,
    pub time_model: TimeModel,
    /// Weight of the makespan increase (in units of one load) in multi-crane rewards.
    pub lambda_time: f64,
    /// Keep a per-step trace of the episode.
    pub trace: bool,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            invalid_penalty: 100.0,
            normalize: false,
            time_model: TimeModel::default(),
            lambda_time: 0.5,
            trace: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StepInfo {
    pub shifters: usize,
    pub invalid: bool,
    /// Makespan so far, for clocked environments.
    pub makespan: Option<f64>,
}

/// Result of an action without the follow-up observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    pub reward: f64,
    pub done: bool,
    pub info: StepInfo,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub observation: Vec<f64>,
    pub reward: f64,
    pub done: bool,
    pub info: StepInfo,
}

/// Final KPIs of a finished episode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeKpis {
    pub shifters: usize,
    /// Makespan for clocked environments; serial load time for the single-crane one.
    pub operation_time: f64,
}

/// One line of an episode trace, written as JSON lines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub step: usize,
    pub action: usize,
    pub shifters: usize,
    pub reward: f64,
    pub invalid: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub crane: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub tau: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub makespan: Option<f64>,
}

pub trait Environment {
    fn observation_len(&self) -> usize;
    fn action_count(&self) -> usize;
    /// Restores the initial state of the current instance.
    fn reset(&mut self) -> (Vec<f64>, Vec<bool>);
    fn observe(&self) -> Vec<f64>;
    /// All-false once the episode is done.
    fn action_mask(&self) -> Vec<bool>;
    /// Applies an action without building the next observation.
    fn act(&mut self, action: usize) -> Result<Outcome>;
    fn is_done(&self) -> bool;
    fn kpis(&self) -> Result<EpisodeKpis>;
    /// Shifters the container addressed by `action` would cost right now.
    fn action_shifters(&self, action: usize) -> Option<usize>;
    fn yard(&self) -> &GridState;
    fn vessel(&self) -> &GridState;
    fn trace(&self) -> &[TraceRecord];

    fn step(&mut self, action: usize) -> Result<StepResult> {
        let out = self.act(action)?;
        Ok(StepResult {
            observation: self.observe(),
            reward: out.reward,
            done: out.done,
            info: out.info,
        })
    }
}

/// The three environment formulations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EnvKind {
    #[serde(rename = "spge")]
    Spge,
    #[serde(rename = "spge-mc")]
    SpgeMc,
    #[serde(rename = "spaec")]
    Spaec,
}

impl EnvKind {
    pub const ALL: [EnvKind; 3] = [EnvKind::Spge, EnvKind::SpgeMc, EnvKind::Spaec];

    pub fn name(self) -> &'static str {
        match self {
            EnvKind::Spge => "spge",
            EnvKind::SpgeMc => "spge-mc",
            EnvKind::Spaec => "spaec",
        }
    }

    pub fn is_multi_crane(self) -> bool {
        !matches!(self, EnvKind::Spge)
    }

    pub fn observation_len(self, spec: &ScenarioSpec) -> usize {
        let base = SLOT_FEATURES * (spec.vessel.capacity() + spec.yard.capacity()) + TARGET_FEATURES;
        let k = spec.num_cranes;
        match self {
            EnvKind::Spge => base,
            EnvKind::SpgeMc => base + 3 * k,
            EnvKind::Spaec => base + 4 * k,
        }
    }

    pub fn action_count(self, spec: &ScenarioSpec) -> usize {
        match self {
            EnvKind::SpgeMc => spec.yard.capacity() * spec.num_cranes,
            EnvKind::Spge | EnvKind::Spaec => spec.yard.capacity(),
        }
    }

    pub fn make(self, instance: ProblemInstance, config: EnvConfig) -> Result<Box<dyn Environment + Send>> {
        Ok(match self {
            EnvKind::Spge => Box::new(SpgeEnv::new(instance, config)?),
            EnvKind::SpgeMc => Box::new(SpgeMcEnv::new(instance, config)?),
            EnvKind::Spaec => Box::new(SpaecEnv::new(instance, config)?),
        })
    }
}

impl std::fmt::Display for EnvKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for EnvKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "spge" => Ok(EnvKind::Spge),
            "spge-mc" | "spgemc" | "mc" => Ok(EnvKind::SpgeMc),
            "spaec" => Ok(EnvKind::Spaec),
            other => Err(format!(
                "unknown environment '{other}', expected one of spge, spge-mc, spaec"
            )),
        }
    }
}

/// Per-feature `(min, max)` bounds used for min-max scaling.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct FeatureBounds(Vec<(f64, f64)>);

impl FeatureBounds {
    pub(crate) fn new(kind: EnvKind, spec: &ScenarioSpec, time: &TimeModel) -> Self {
        let mut b = Vec::with_capacity(kind.observation_len(spec));
        let groups_hi = spec.num_groups.saturating_sub(1) as f64;
        for grid in [spec.vessel, spec.yard] {
            for _ in 0..grid.capacity() {
                b.push((1.0, grid.bays as f64));
                b.push((1.0, grid.rows as f64));
                b.push((1.0, grid.tiers as f64));
                b.push((0.0, 1.0));
                b.push((-1.0, groups_hi));
            }
        }
        let v = spec.vessel;
        b.push((-1.0, (v.capacity() - 1) as f64));
        b.push((-1.0, v.bays as f64));
        b.push((-1.0, v.rows as f64));
        b.push((-1.0, v.tiers as f64));
        b.push((-1.0, 1.0));
        b.push((-1.0, groups_hi));
        if kind.is_multi_crane() {
            let k = spec.num_cranes;
            let longest = time.duration(spec.yard.tiers.saturating_sub(1));
            b.extend(std::iter::repeat_n((0.0, longest), k));
            b.extend(std::iter::repeat_n((-1.0, (spec.yard.capacity() - 1) as f64), k));
            b.extend(std::iter::repeat_n((-1.0, (v.capacity() - 1) as f64), k));
            if kind == EnvKind::Spaec {
                b.extend(std::iter::repeat_n((0.0, 1.0), k));
            }
        }
        Self(b)
    }

    pub(crate) fn apply(&self, obs: &mut [f64]) {
        for (x, &(lo, hi)) in obs.iter_mut().zip(&self.0) {
            *x = if hi > lo { (*x - lo) / (hi - lo) } else { 0.0 };
        }
    }
}

pub(crate) fn push_grid(out: &mut Vec<f64>, grid: &GridState) {
    for s in &grid.slots {
        out.extend_from_slice(&[
            s.coord.bay as f64,
            s.coord.row as f64,
            s.coord.tier as f64,
            f64::from(s.occupancy),
            f64::from(s.group),
        ]);
    }
}

pub(crate) fn push_target(out: &mut Vec<f64>, vessel: &GridState, target: Option<usize>) {
    match target {
        Some(id) => {
            let s = vessel.slots[id];
            out.extend_from_slice(&[
                id as f64,
                s.coord.bay as f64,
                s.coord.row as f64,
                s.coord.tier as f64,
                f64::from(s.occupancy),
                f64::from(s.group),
            ]);
        }
        None => out.extend_from_slice(&[-1.0; TARGET_FEATURES]),
    }
}

/// Yard slots holding a container of `group`.
pub(crate) fn matching_containers(yard: &GridState, group: i32) -> impl Iterator<Item = usize> + '_ {
    yard.slots
        .iter()
        .enumerate()
        .filter(move |(_, s)| s.is_occupied() && s.group == group)
        .map(|(id, _)| id)
}
