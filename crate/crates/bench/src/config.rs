//! Experiment configuration as loaded from JSON or assembled by the CLI.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use stowage_core::{EnvConfig, EnvKind, ScenarioSpec, TimeModel};
use stowage_rl::{Algo, AlgoConfig, TaskSpec, TrainSettings};

use crate::error::{BenchError, Result};
use crate::scenarios::{allowed_variants, default_eval_every, scenario};

/// A registry id or a fully specified custom scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScenarioRef {
    Id(u8),
    Custom(ScenarioSpec),
}

impl ScenarioRef {
    pub fn id(&self) -> Option<u8> {
        match self {
            ScenarioRef::Id(id) => Some(*id),
            ScenarioRef::Custom(_) => None,
        }
    }

    /// Label used in run ids and CSV files.
    pub fn label(&self) -> String {
        match self {
            ScenarioRef::Id(id) => id.to_string(),
            ScenarioRef::Custom(_) => "custom".to_string(),
        }
    }

    pub fn spec(&self) -> Result<ScenarioSpec> {
        match self {
            ScenarioRef::Id(id) => scenario(*id),
            ScenarioRef::Custom(spec) => Ok(*spec),
        }
    }
}

fn default_timesteps() -> usize {
    20_000
}

fn default_eval_episodes() -> usize {
    10
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scenario: ScenarioRef,
    /// Defaults to spge for scenarios 1-5 and spge-mc for 6-8.
    #[serde(default)]
    pub env: Option<EnvKind>,
    pub algo: Algo,
    /// Defaults to 10 for spge and 30 for the multi-crane variants.
    #[serde(default)]
    pub repetitions: Option<usize>,
    #[serde(default = "default_timesteps")]
    pub total_timesteps: usize,
    /// Defaults to 200 for scenario 6, 500 for 7 and 8, 1000 otherwise.
    #[serde(default)]
    pub eval_every: Option<usize>,
    #[serde(default = "default_eval_episodes")]
    pub eval_episodes: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub algo_config: AlgoConfig,
    #[serde(default)]
    pub time_model: TimeModel,
    /// Write a greedy episode trace for every run.
    #[serde(default)]
    pub trace: bool,
}

impl ExperimentConfig {
    pub fn new(scenario: ScenarioRef, algo: Algo) -> Self {
        Self {
            scenario,
            env: None,
            algo,
            repetitions: None,
            total_timesteps: default_timesteps(),
            eval_every: None,
            eval_episodes: default_eval_episodes(),
            base_seed: 0,
            out_dir: default_out_dir(),
            algo_config: AlgoConfig::default(),
            time_model: TimeModel::default(),
            trace: false,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn variant(&self) -> EnvKind {
        self.env.unwrap_or_else(|| match self.scenario.id() {
            Some(6..=8) => EnvKind::SpgeMc,
            Some(_) => EnvKind::Spge,
            None => match &self.scenario {
                ScenarioRef::Custom(s) if s.num_cranes > 1 => EnvKind::SpgeMc,
                _ => EnvKind::Spge,
            },
        })
    }

    pub fn repetitions(&self) -> usize {
        self.repetitions
            .unwrap_or(if self.variant().is_multi_crane() { 30 } else { 10 })
    }

    pub fn settings(&self) -> TrainSettings {
        TrainSettings {
            total_timesteps: self.total_timesteps,
            eval_every: self
                .eval_every
                .unwrap_or_else(|| default_eval_every(self.scenario.id())),
            eval_episodes: self.eval_episodes,
        }
    }

    pub fn task(&self) -> Result<TaskSpec> {
        let mut task = TaskSpec::new(self.variant(), self.scenario.spec()?);
        task.env = EnvConfig {
            time_model: self.time_model,
            trace: self.trace,
            ..task.env
        };
        Ok(task)
    }

    /// Checks every invariant without running anything.
    pub fn validate(&self) -> Result<()> {
        let spec = self.scenario.spec()?;
        spec.validate()?;
        let variant = self.variant();
        match self.scenario.id() {
            Some(id) => {
                let allowed = allowed_variants(id)?;
                if !allowed.contains(&variant) {
                    let names: Vec<&str> = allowed.iter().map(|v| v.name()).collect();
                    return Err(BenchError::Config(format!(
                        "scenario {id} has {} crane(s) and runs under {}, not {variant}",
                        spec.num_cranes,
                        names.join(" or ")
                    )));
                }
            }
            None => {
                if variant == EnvKind::Spge && spec.num_cranes != 1 {
                    return Err(BenchError::Config(format!(
                        "variant spge needs exactly one crane, the scenario has {}",
                        spec.num_cranes
                    )));
                }
            }
        }
        if self.repetitions() == 0 {
            return Err(BenchError::Config("repetitions must be positive".into()));
        }
        let settings = self.settings();
        if settings.eval_every == 0 || settings.eval_episodes == 0 {
            return Err(BenchError::Config(
                "eval_every and eval_episodes must be positive".into(),
            ));
        }
        self.time_model.validate()?;
        self.algo_config.validate()?;
        Ok(())
    }
}
