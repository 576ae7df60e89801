//! Slot-grid model of container stowage planning: grids, seeded scenario generation,
//! shifter accounting, the three stowage environments and non-learning reference
//! policies.

pub mod baselines;
pub mod env;
pub mod error;
pub mod grid;
pub mod scenario;

pub use env::{
    ClockedState, CompositeAction, CraneState, EnvConfig, EnvKind, Environment, EpisodeKpis,
    Outcome, SpaecEnv, SpgeEnv, SpgeMcEnv, StepInfo, StepResult, TimeModel, TraceRecord,
};
pub use error::{ModelError, Result};
pub use grid::{
    count_shifters, extract_container, place_container, GridSpec, GridState, SlotCoord,
    SlotRecord, NO_GROUP,
};
pub use scenario::{
    build_sequencer, generate_instance, partition_targets, ProblemInstance, ScenarioSpec,
};
