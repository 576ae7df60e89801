//! Single-crane environment: the sequencer fixes the target slot, the agent picks a
//! yard container for it.

use super::{
    push_grid, push_target, EnvConfig, EnvKind, EpisodeKpis, Environment, FeatureBounds,
    Outcome, StepInfo, TraceRecord,
};
use crate::error::{ModelError, Result};
use crate::grid::{count_shifters, extract_container, place_container, GridState};
use crate::scenario::ProblemInstance;

#[derive(Debug, Clone)]
pub struct SpgeEnv {
    instance: ProblemInstance,
    config: EnvConfig,
    bounds: Option<FeatureBounds>,
    vessel: GridState,
    yard: GridState,
    cursor: usize,
    steps: usize,
    shifters: usize,
    trace: Vec<TraceRecord>,
}

impl SpgeEnv {
    pub fn new(instance: ProblemInstance, config: EnvConfig) -> Result<Self> {
        config.time_model.validate()?;
        let bounds = config
            .normalize
            .then(|| FeatureBounds::new(EnvKind::Spge, &instance.spec, &config.time_model));
        Ok(Self {
            vessel: instance.vessel.clone(),
            yard: instance.yard.clone(),
            instance,
            config,
            bounds,
            cursor: 0,
            steps: 0,
            shifters: 0,
            trace: Vec::new(),
        })
    }

    pub fn instance(&self) -> &ProblemInstance {
        &self.instance
    }

    /// Vessel slot the sequencer currently points at.
    pub fn current_target(&self) -> Option<usize> {
        self.instance.targets.get(self.cursor).copied()
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn is_valid(&self, action: usize) -> bool {
        match (self.current_target(), self.yard.slots.get(action)) {
            (Some(t), Some(slot)) => slot.is_occupied() && slot.group == self.vessel.slots[t].group,
            _ => false,
        }
    }

    /// Total shifters of the finished episode.
    pub fn episode_shifters(&self) -> Result<usize> {
        if self.is_done() {
            Ok(self.shifters)
        } else {
            Err(ModelError::EpisodeRunning)
        }
    }

    fn record(&mut self, action: usize, out: &Outcome) {
        if self.config.trace {
            self.trace.push(TraceRecord {
                step: self.steps,
                action,
                shifters: out.info.shifters,
                reward: out.reward,
                invalid: out.info.invalid,
                crane: None,
                t: None,
                tau: None,
                makespan: None,
            });
        }
    }
}

impl Environment for SpgeEnv {
    fn observation_len(&self) -> usize {
        EnvKind::Spge.observation_len(&self.instance.spec)
    }

    fn action_count(&self) -> usize {
        self.yard.capacity()
    }

    fn reset(&mut self) -> (Vec<f64>, Vec<bool>) {
        self.vessel = self.instance.vessel.clone();
        self.yard = self.instance.yard.clone();
        self.cursor = 0;
        self.steps = 0;
        self.shifters = 0;
        self.trace.clear();
        (self.observe(), self.action_mask())
    }

    fn observe(&self) -> Vec<f64> {
        let mut obs = Vec::with_capacity(self.observation_len());
        push_grid(&mut obs, &self.vessel);
        push_grid(&mut obs, &self.yard);
        push_target(&mut obs, &self.vessel, self.current_target());
        if let Some(b) = &self.bounds {
            b.apply(&mut obs);
        }
        obs
    }

    fn action_mask(&self) -> Vec<bool> {
        (0..self.yard.capacity()).map(|a| self.is_valid(a)).collect()
    }

    fn act(&mut self, action: usize) -> Result<Outcome> {
        let Some(target) = self.current_target() else {
            return Err(ModelError::EpisodeFinished);
        };
        if action >= self.yard.capacity() {
            return Err(ModelError::ActionOutOfRange {
                action,
                size: self.yard.capacity(),
            });
        }
        let out = if self.is_valid(action) {
            let taken = extract_container(&mut self.yard, action)?;
            place_container(&mut self.vessel, target, taken.group)?;
            self.cursor += 1;
            self.shifters += taken.shifters;
            Outcome {
                reward: -(taken.shifters as f64),
                done: self.is_done(),
                info: StepInfo {
                    shifters: taken.shifters,
                    invalid: false,
                    makespan: None,
                },
            }
        } else {
            Outcome {
                reward: -self.config.invalid_penalty,
                done: false,
                info: StepInfo {
                    shifters: 0,
                    invalid: true,
                    makespan: None,
                },
            }
        };
        self.record(action, &out);
        self.steps += 1;
        Ok(out)
    }

    fn is_done(&self) -> bool {
        self.cursor >= self.instance.targets.len()
    }

    fn kpis(&self) -> Result<EpisodeKpis> {
        let shifters = self.episode_shifters()?;
        let time = &self.config.time_model;
        Ok(EpisodeKpis {
            shifters,
            operation_time: self.instance.targets.len() as f64 * time.load
                + shifters as f64 * time.shift,
        })
    }

    fn action_shifters(&self, action: usize) -> Option<usize> {
        count_shifters(&self.yard, action).ok()
    }

    fn yard(&self) -> &GridState {
        &self.yard
    }

    fn vessel(&self) -> &GridState {
        &self.vessel
    }

    fn trace(&self) -> &[TraceRecord] {
        &self.trace
    }
}
