//! Non-learning reference policies and exhaustive optimizers.
//!
//! The optimizers enumerate action sequences through the real environments, so an
//! oracle value is exactly what replaying its sequence in the environment yields.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::{EnvConfig, Environment, EpisodeKpis, SpgeEnv, SpgeMcEnv, TimeModel};
use crate::error::{ModelError, Result};
use crate::scenario::ProblemInstance;

/// Largest container count accepted by [`brute_force_min_shifters`].
pub const MAX_SHIFTER_ORACLE_CONTAINERS: usize = 8;
/// Largest container count accepted by [`brute_force_min_makespan`].
pub const MAX_MAKESPAN_ORACLE_CONTAINERS: usize = 6;
/// Largest crane count accepted by [`brute_force_min_makespan`].
pub const MAX_MAKESPAN_ORACLE_CRANES: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    /// Total shifters, or makespan in seconds.
    pub best_value: f64,
    /// Actions in the action space of the environment the oracle searched.
    pub best_sequence: Vec<usize>,
    pub nodes_explored: u64,
}

fn valid_actions(env: &dyn Environment) -> Vec<usize> {
    env.action_mask()
        .iter()
        .enumerate()
        .filter(|(_, &m)| m)
        .map(|(a, _)| a)
        .collect()
}

/// Plays one episode choosing uniformly among valid actions. Resets `env` first.
pub fn random_policy<R: Rng + ?Sized>(env: &mut dyn Environment, rng: &mut R) -> Result<EpisodeKpis> {
    env.reset();
    while !env.is_done() {
        let valid = valid_actions(env);
        let a = valid[rng.random_range(0..valid.len())];
        env.act(a)?;
    }
    env.kpis()
}

/// Valid action whose container is currently cheapest to extract; ties go to the lowest
/// action index.
pub fn greedy_action(env: &dyn Environment) -> Option<usize> {
    valid_actions(env)
        .into_iter()
        .min_by_key(|&a| (env.action_shifters(a).unwrap_or(usize::MAX), a))
}

/// Plays one episode with [`greedy_action`]. Resets `env` first.
pub fn greedy_min_shifter_policy(env: &mut dyn Environment) -> Result<EpisodeKpis> {
    env.reset();
    while let Some(a) = greedy_action(env) {
        env.act(a)?;
    }
    env.kpis()
}

/// Minimal total shifters over every valid container ordering for the fixed sequencer,
/// with the default guard of [`MAX_SHIFTER_ORACLE_CONTAINERS`].
pub fn brute_force_min_shifters(instance: &ProblemInstance) -> Result<OracleResult> {
    brute_force_min_shifters_guarded(instance, MAX_SHIFTER_ORACLE_CONTAINERS)
}

pub fn brute_force_min_shifters_guarded(
    instance: &ProblemInstance,
    max_containers: usize,
) -> Result<OracleResult> {
    let m = instance.num_containers();
    if m > max_containers {
        return Err(ModelError::OracleGuard(format!(
            "{m} containers exceed the enumeration guard of {max_containers}"
        )));
    }
    let env = SpgeEnv::new(instance.clone(), EnvConfig::default())?;
    let mut search = Search::new(|e: &SpgeEnv| e.episode_shifters().map(|s| s as f64));
    search.descend(&env, &mut Vec::with_capacity(m))?;
    Ok(search.finish())
}

/// Minimal makespan over every interleaved (container, crane) decision sequence, with
/// the default guards.
pub fn brute_force_min_makespan(instance: &ProblemInstance, time: TimeModel) -> Result<OracleResult> {
    brute_force_min_makespan_guarded(
        instance,
        time,
        MAX_MAKESPAN_ORACLE_CONTAINERS,
        MAX_MAKESPAN_ORACLE_CRANES,
    )
}

pub fn brute_force_min_makespan_guarded(
    instance: &ProblemInstance,
    time: TimeModel,
    max_containers: usize,
    max_cranes: usize,
) -> Result<OracleResult> {
    let m = instance.num_containers();
    let k = instance.num_cranes();
    if m > max_containers || k > max_cranes {
        return Err(ModelError::OracleGuard(format!(
            "{m} containers / {k} cranes exceed the enumeration guard of {max_containers} / {max_cranes}"
        )));
    }
    let config = EnvConfig {
        time_model: time,
        lambda_time: 0.0,
        ..EnvConfig::default()
    };
    let env = SpgeMcEnv::new(instance.clone(), config)?;
    let mut search = Search::new(|e: &SpgeMcEnv| e.makespan());
    search.descend(&env, &mut Vec::with_capacity(m))?;
    Ok(search.finish())
}

struct Search<F> {
    value: F,
    best: Option<(f64, Vec<usize>)>,
    nodes: u64,
}

impl<F> Search<F> {
    fn new(value: F) -> Self {
        Self {
            value,
            best: None,
            nodes: 0,
        }
    }

    fn descend<E>(&mut self, env: &E, path: &mut Vec<usize>) -> Result<()>
    where
        E: Environment + Clone,
        F: Fn(&E) -> Result<f64>,
    {
        self.nodes += 1;
        if env.is_done() {
            let v = (self.value)(env)?;
            if self.best.as_ref().is_none_or(|(b, _)| v < *b) {
                self.best = Some((v, path.clone()));
            }
            return Ok(());
        }
        for a in valid_actions(env) {
            let mut child = env.clone();
            child.act(a)?;
            path.push(a);
            self.descend(&child, path)?;
            path.pop();
        }
        Ok(())
    }

    fn finish(self) -> OracleResult {
        let (best_value, best_sequence) = self.best.expect("search reaches at least one leaf");
        OracleResult {
            best_value,
            best_sequence,
            nodes_explored: self.nodes,
        }
    }
}

/// Replays `actions` from a fresh reset and returns the episode KPIs.
pub fn replay(env: &mut dyn Environment, actions: &[usize]) -> Result<EpisodeKpis> {
    env.reset();
    for &a in actions {
        let out = env.act(a)?;
        if out.info.invalid {
            return Err(ModelError::InvalidInstance(format!("replayed action {a} is invalid")));
        }
    }
    env.kpis()
}
