//! Experiment harness: scenario registry, repeated training runs, CSV outputs and
//! variant comparison.

pub mod compare;
pub mod config;
pub mod error;
pub mod output;
pub mod runner;
pub mod scenarios;
pub mod stats;

pub use compare::{compare_variants, write_comparison, ComparisonRow, Kpi};
pub use config::{ExperimentConfig, ScenarioRef};
pub use error::{BenchError, Result};
pub use output::{aggregate, emit_outputs, CurveRow, FinalRow};
pub use runner::{load_runs, run_experiment, RunEntry};
pub use stats::{welch_t_test, WelchResult};
