//! Training loop with interleaved greedy evaluation on a fixed set of instances.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use stowage_core::baselines::random_policy;
use stowage_core::{generate_instance, EnvConfig, EnvKind, Environment, EpisodeKpis, ScenarioSpec, TraceRecord};

use crate::agent::{make_learner, Learner};
use crate::buffer::Transition;
use crate::config::{Algo, AlgoConfig};
use crate::error::{Result, RlError};
use crate::trpo::TrpoStep;

/// Offset separating evaluation instance seeds from the scenario's base seed.
const EVAL_SEED_OFFSET: u64 = 1 << 40;

/// Environment variant, scenario shape and environment settings of a training task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub kind: EnvKind,
    pub scenario: ScenarioSpec,
    pub env: EnvConfig,
}

impl TaskSpec {
    /// Task with observation normalization switched on.
    pub fn new(kind: EnvKind, scenario: ScenarioSpec) -> Self {
        Self {
            kind,
            scenario,
            env: EnvConfig {
                normalize: true,
                ..EnvConfig::default()
            },
        }
    }

    /// Environment on a fresh instance; step tracing stays off regardless of `env.trace`.
    pub fn make_env(&self, instance_seed: u64) -> Result<Box<dyn Environment + Send>> {
        self.build(instance_seed, false)
    }

    fn build(&self, instance_seed: u64, trace: bool) -> Result<Box<dyn Environment + Send>> {
        let instance = generate_instance(&self.scenario.with_seed(instance_seed))?;
        let config = EnvConfig {
            trace,
            ..self.env
        };
        Ok(self.kind.make(instance, config)?)
    }

    /// Seed of the `i`-th evaluation instance; identical for every run of the task.
    pub fn eval_seed(&self, i: usize) -> u64 {
        self.scenario
            .seed
            .wrapping_add(EVAL_SEED_OFFSET)
            .wrapping_add(i as u64)
    }

    pub fn observation_len(&self) -> usize {
        self.kind.observation_len(&self.scenario)
    }

    pub fn action_count(&self) -> usize {
        self.kind.action_count(&self.scenario)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainSettings {
    pub total_timesteps: usize,
    pub eval_every: usize,
    pub eval_episodes: usize,
}

impl Default for TrainSettings {
    fn default() -> Self {
        Self {
            total_timesteps: 20_000,
            eval_every: 1_000,
            eval_episodes: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalSample {
    pub timestep: usize,
    pub mean_shifters: f64,
    pub mean_optime: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub updates: usize,
    pub episodes: usize,
    /// Mean update loss over each evaluation window, keyed by the closing timestep.
    pub losses: Vec<(usize, f64)>,
    pub trpo_steps: Vec<TrpoStep>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub algo: Algo,
    pub seed: u64,
    pub config: AlgoConfig,
    pub settings: TrainSettings,
    pub samples: Vec<EvalSample>,
    pub diagnostics: Diagnostics,
    /// Greedy episode on the first evaluation instance after training, when the task
    /// asks for traces.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub final_trace: Vec<TraceRecord>,
}

impl RunRecord {
    pub fn final_sample(&self) -> Option<&EvalSample> {
        self.samples.last()
    }
}

/// Runs `episodes` evaluation episodes with `choose` picking each action.
pub fn evaluate<F>(task: &TaskSpec, episodes: usize, mut choose: F) -> Result<(f64, f64)>
where
    F: FnMut(&dyn Environment, &[f64], &[bool]) -> Result<usize>,
{
    if episodes == 0 {
        return Err(RlError::Config("evaluation needs at least one episode".into()));
    }
    let mut shifters = 0.0;
    let mut optime = 0.0;
    for i in 0..episodes {
        let mut env = task.make_env(task.eval_seed(i))?;
        let (mut obs, mut mask) = env.reset();
        while !env.is_done() {
            let action = choose(env.as_ref(), &obs, &mask)?;
            env.act(action)?;
            obs = env.observe();
            mask = env.action_mask();
        }
        let k = env.kpis()?;
        shifters += k.shifters as f64;
        optime += k.operation_time;
    }
    Ok((shifters / episodes as f64, optime / episodes as f64))
}

/// Mean KPIs of the uniform random policy on the task's evaluation instances.
pub fn evaluate_random(task: &TaskSpec, episodes: usize, seed: u64) -> Result<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut shifters = 0.0;
    let mut optime = 0.0;
    for i in 0..episodes {
        let mut env = task.make_env(task.eval_seed(i))?;
        let EpisodeKpis {
            shifters: s,
            operation_time,
        } = random_policy(env.as_mut(), &mut rng)?;
        shifters += s as f64;
        optime += operation_time;
    }
    Ok((shifters / episodes as f64, optime / episodes as f64))
}

fn to_f32(obs: &[f64]) -> Arc<[f32]> {
    obs.iter().map(|&v| v as f32).collect()
}

fn widen(obs: &[f32]) -> Vec<f64> {
    obs.iter().map(|&v| f64::from(v)).collect()
}

fn greedy_eval(task: &TaskSpec, learner: &dyn Learner, episodes: usize, timestep: usize) -> Result<EvalSample> {
    let (mean_shifters, mean_optime) = evaluate(task, episodes, |_, obs, mask| {
        // Same precision the learner sees during training.
        learner.greedy(&widen(&to_f32(obs)), mask)
    })?;
    Ok(EvalSample {
        timestep,
        mean_shifters,
        mean_optime,
    })
}

fn trace_episode(task: &TaskSpec, learner: &dyn Learner) -> Result<Vec<TraceRecord>> {
    let mut env = task.build(task.eval_seed(0), true)?;
    let (mut obs, mut mask) = env.reset();
    while !env.is_done() {
        let action = learner.greedy(&widen(&to_f32(&obs)), &mask)?;
        env.act(action)?;
        obs = env.observe();
        mask = env.action_mask();
    }
    Ok(env.trace().to_vec())
}

/// Trains `algo` on fresh instances of `task` and evaluates at step 0, every
/// `eval_every` steps and at the end. Reproducible from `seed`.
pub fn train(task: &TaskSpec, algo: Algo, cfg: &AlgoConfig, settings: TrainSettings, seed: u64) -> Result<RunRecord> {
    if settings.eval_every == 0 {
        return Err(RlError::Config("eval_every must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut instance_rng = ChaCha8Rng::seed_from_u64(rng.random());
    let mut learner = make_learner(
        algo,
        cfg,
        task.observation_len(),
        task.action_count(),
        settings.total_timesteps,
        &mut rng,
    )?;
    let mut samples = vec![greedy_eval(task, learner.as_ref(), settings.eval_episodes, 0)?];
    let mut diag = Diagnostics::default();
    let mut window = (0.0, 0usize);

    let mut env = task.make_env(instance_rng.random())?;
    let (o, m) = env.reset();
    let mut obs = to_f32(&o);
    let mut mask: Arc<[bool]> = Arc::from(m);
    for step in 0..settings.total_timesteps {
        let decision = learner.act(&widen(&obs), &mask, step, &mut rng)?;
        let outcome = env.act(decision.action)?;
        let next_obs = to_f32(&env.observe());
        let next_mask: Arc<[bool]> = Arc::from(env.action_mask());
        let transition = Transition {
            obs: obs.clone(),
            mask: mask.clone(),
            action: decision.action,
            reward: outcome.reward,
            next_obs: next_obs.clone(),
            next_mask: next_mask.clone(),
            done: outcome.done,
        };
        if let Some(stats) = learner.observe(transition, decision, step, &mut rng)? {
            diag.updates += 1;
            window.0 += stats.loss;
            window.1 += 1;
            if let Some(t) = stats.trpo {
                diag.trpo_steps.push(t);
            }
        }
        if outcome.done {
            diag.episodes += 1;
            env = task.make_env(instance_rng.random())?;
            let (o, m) = env.reset();
            obs = to_f32(&o);
            mask = Arc::from(m);
        } else {
            obs = next_obs;
            mask = next_mask;
        }
        let done_steps = step + 1;
        if done_steps % settings.eval_every == 0 || done_steps == settings.total_timesteps {
            samples.push(greedy_eval(task, learner.as_ref(), settings.eval_episodes, done_steps)?);
            if window.1 > 0 {
                diag.losses.push((done_steps, window.0 / window.1 as f64));
                window = (0.0, 0);
            }
        }
    }
    let final_trace = if task.env.trace {
        trace_episode(task, learner.as_ref())?
    } else {
        Vec::new()
    };
    Ok(RunRecord {
        algo,
        seed,
        config: cfg.clone(),
        settings,
        samples,
        diagnostics: diag,
        final_trace,
    })
}
