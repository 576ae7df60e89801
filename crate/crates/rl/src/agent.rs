//! Stateful learners wrapping the loss functions: action selection, rollout or replay
//! storage, and the update schedule of each algorithm.

use std::sync::Arc;

use ndarray::{Array2, ArrayView2};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::buffer::{obs_matrix, ReplayBuffer, Transition};
use crate::config::{Algo, AlgoConfig};
use crate::dist::{masked_greedy, masked_sample, uniform_valid};
use crate::dqn::{dqn_loss, dqn_targets};
use crate::error::Result;
use crate::net::{Mlp, NetworkSpec};
use crate::optim::{clip_grad_norm, Adam};
use crate::policy::{a2c_loss, ppo_loss, value_loss, PolicyBatch};
use crate::qrdqn::{qrdqn_loss, qrdqn_targets, quantile_means};
use crate::returns::{gae, normalize, nstep_returns};
use crate::trpo::{trpo_policy_step, TrpoBatch, TrpoStep};

/// What the behaviour policy chose, with the quantities on-policy updates need.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    pub action: usize,
    pub log_prob: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpdateStats {
    pub loss: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trpo: Option<TrpoStep>,
}

pub trait Learner: Send {
    fn algo(&self) -> Algo;
    /// Exploratory action for training step `step`.
    fn act(&mut self, obs: &[f64], mask: &[bool], step: usize, rng: &mut ChaCha8Rng) -> Result<Decision>;
    /// Deterministic action used for evaluation.
    fn greedy(&self, obs: &[f64], mask: &[bool]) -> Result<usize>;
    /// Stores a transition and runs any update that is due.
    fn observe(
        &mut self,
        transition: Transition,
        decision: Decision,
        step: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<Option<UpdateStats>>;
}

fn row(obs: &[f64]) -> ArrayView2<'_, f64> {
    ArrayView2::from_shape((1, obs.len()), obs).expect("observation is one row")
}

fn net_spec(cfg: &AlgoConfig, input_dim: usize, output_dim: usize) -> NetworkSpec {
    NetworkSpec {
        input_dim,
        hidden: cfg.hidden.clone(),
        activation: cfg.activation,
        output_dim,
    }
}

pub fn make_learner(
    algo: Algo,
    cfg: &AlgoConfig,
    obs_len: usize,
    actions: usize,
    total_timesteps: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Box<dyn Learner>> {
    cfg.validate()?;
    Ok(match algo {
        Algo::Dqn | Algo::Qrdqn => Box::new(ValueLearner::new(algo, cfg, obs_len, actions, total_timesteps, rng)),
        Algo::A2c | Algo::Ppo => Box::new(ActorCriticLearner::new(algo, cfg, obs_len, actions, rng)),
        Algo::Trpo => Box::new(TrpoLearner::new(cfg, obs_len, actions, rng)),
    })
}

/// DQN and QR-DQN: epsilon-greedy behaviour, uniform replay, periodic target copy.
pub struct ValueLearner {
    algo: Algo,
    cfg: AlgoConfig,
    quantiles: usize,
    online: Mlp,
    target: Mlp,
    opt: Adam,
    buffer: ReplayBuffer,
    updates: usize,
    total_timesteps: usize,
    obs_len: usize,
}

impl ValueLearner {
    pub fn new(
        algo: Algo,
        cfg: &AlgoConfig,
        obs_len: usize,
        actions: usize,
        total_timesteps: usize,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let quantiles = if algo == Algo::Qrdqn { cfg.qrdqn.quantiles } else { 1 };
        let online = Mlp::new(net_spec(cfg, obs_len, actions * quantiles), 1.0, rng);
        Self {
            algo,
            cfg: cfg.clone(),
            quantiles,
            target: online.clone(),
            opt: Adam::new(online.param_count(), cfg.learning_rate),
            online,
            buffer: ReplayBuffer::new(cfg.dqn.buffer_size),
            updates: 0,
            total_timesteps,
            obs_len,
        }
    }

    pub fn online(&self) -> &Mlp {
        &self.online
    }

    fn update(&mut self, rng: &mut ChaCha8Rng) -> f64 {
        let batch = self.buffer.sample(self.cfg.dqn.batch_size, rng);
        let obs = obs_matrix(batch.iter().map(|t| &t.obs[..]), self.obs_len);
        let next = obs_matrix(batch.iter().map(|t| &t.next_obs[..]), self.obs_len);
        let actions: Vec<usize> = batch.iter().map(|t| t.action).collect();
        let (loss, mut grad) = if self.algo == Algo::Qrdqn {
            let targets = qrdqn_targets(&self.target, next.view(), &batch, self.cfg.gamma, self.quantiles);
            qrdqn_loss(&self.online, obs.view(), &actions, targets.view(), self.cfg.qrdqn.kappa)
        } else {
            let targets = dqn_targets(&self.target, next.view(), &batch, self.cfg.gamma);
            dqn_loss(&self.online, obs.view(), &actions, &targets)
        };
        clip_grad_norm(&mut grad, self.cfg.dqn.max_grad_norm);
        self.opt.step(self.online.params_mut(), &grad);
        self.updates += 1;
        if self.updates % self.cfg.dqn.target_sync == 0 {
            self.target.set_params(self.online.params());
        }
        loss
    }
}

impl Learner for ValueLearner {
    fn algo(&self) -> Algo {
        self.algo
    }

    fn act(&mut self, obs: &[f64], mask: &[bool], step: usize, rng: &mut ChaCha8Rng) -> Result<Decision> {
        let eps = self.cfg.dqn.epsilon(step, self.total_timesteps);
        let action = if rng.random::<f64>() < eps {
            uniform_valid(mask, rng)?
        } else {
            self.greedy(obs, mask)?
        };
        Ok(Decision {
            action,
            log_prob: 0.0,
            value: 0.0,
        })
    }

    fn greedy(&self, obs: &[f64], mask: &[bool]) -> Result<usize> {
        let out = self.online.forward(row(obs));
        let out = out.as_slice().expect("row-major output");
        if self.algo == Algo::Qrdqn {
            masked_greedy(&quantile_means(out, self.quantiles), mask)
        } else {
            masked_greedy(out, mask)
        }
    }

    fn observe(
        &mut self,
        transition: Transition,
        _decision: Decision,
        step: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<Option<UpdateStats>> {
        self.buffer.push(transition);
        let seen = step + 1;
        if seen >= self.cfg.dqn.learning_starts && seen % self.cfg.dqn.train_freq == 0 {
            let loss = self.update(rng);
            return Ok(Some(UpdateStats { loss, trpo: None }));
        }
        Ok(None)
    }
}

/// Rollout arrays shared by the on-policy learners.
struct Rollout {
    transitions: Vec<Transition>,
    decisions: Vec<Decision>,
}

impl Rollout {
    fn new() -> Self {
        Self {
            transitions: Vec::new(),
            decisions: Vec::new(),
        }
    }

    fn len(&self) -> usize {
        self.transitions.len()
    }

    fn clear(&mut self) {
        self.transitions.clear();
        self.decisions.clear();
    }

    fn rewards(&self) -> Vec<f64> {
        self.transitions.iter().map(|t| t.reward).collect()
    }

    fn dones(&self) -> Vec<bool> {
        self.transitions.iter().map(|t| t.done).collect()
    }

    fn values(&self) -> Vec<f64> {
        self.decisions.iter().map(|d| d.value).collect()
    }

    fn last(&self) -> &Transition {
        self.transitions.last().expect("rollout is not empty")
    }
}

/// Minibatch view over rollout indices.
struct Gathered {
    obs: Array2<f64>,
    masks: Vec<Arc<[bool]>>,
    actions: Vec<usize>,
    advantages: Vec<f64>,
    returns: Vec<f64>,
    old_log_probs: Vec<f64>,
}

fn gather(rollout: &Rollout, idx: &[usize], adv: &[f64], ret: &[f64], width: usize) -> Gathered {
    Gathered {
        obs: obs_matrix(idx.iter().map(|&i| &rollout.transitions[i].obs[..]), width),
        masks: idx.iter().map(|&i| rollout.transitions[i].mask.clone()).collect(),
        actions: idx.iter().map(|&i| rollout.transitions[i].action).collect(),
        advantages: idx.iter().map(|&i| adv[i]).collect(),
        returns: idx.iter().map(|&i| ret[i]).collect(),
        old_log_probs: idx.iter().map(|&i| rollout.decisions[i].log_prob).collect(),
    }
}

impl Gathered {
    fn batch(&self) -> PolicyBatch<'_> {
        PolicyBatch {
            obs: self.obs.view(),
            masks: &self.masks,
            actions: &self.actions,
            advantages: &self.advantages,
            returns: &self.returns,
            old_log_probs: &self.old_log_probs,
        }
    }
}

/// A2C and PPO over one network with `actions` logits followed by a value output.
pub struct ActorCriticLearner {
    algo: Algo,
    cfg: AlgoConfig,
    net: Mlp,
    opt: Adam,
    rollout: Rollout,
    actions: usize,
    obs_len: usize,
}

impl ActorCriticLearner {
    pub fn new(algo: Algo, cfg: &AlgoConfig, obs_len: usize, actions: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut net = Mlp::new(net_spec(cfg, obs_len, actions + 1), 1.0, rng);
        net.scale_output_columns(0, actions, 0.01);
        let opt = if algo == Algo::Ppo {
            Adam::new(net.param_count(), cfg.learning_rate).with_eps(1e-5)
        } else {
            Adam::new(net.param_count(), cfg.learning_rate)
        };
        Self {
            algo,
            cfg: cfg.clone(),
            net,
            opt,
            rollout: Rollout::new(),
            actions,
            obs_len,
        }
    }

    pub fn net(&self) -> &Mlp {
        &self.net
    }

    fn value_of(&self, obs: &[f32]) -> f64 {
        let x: Vec<f64> = obs.iter().map(|&v| f64::from(v)).collect();
        self.net.forward(row(&x))[[0, self.actions]]
    }

    fn bootstrap(&self) -> f64 {
        let last = self.rollout.last();
        if last.done {
            0.0
        } else {
            self.value_of(&last.next_obs)
        }
    }

    fn update_a2c(&mut self) -> f64 {
        let values = self.rollout.values();
        let returns = nstep_returns(
            &self.rollout.rewards(),
            &self.rollout.dones(),
            &values,
            self.bootstrap(),
            self.cfg.a2c.n_steps,
            self.cfg.gamma,
        )
        .expect("rollout arrays share one length");
        let adv: Vec<f64> = returns.iter().zip(&values).map(|(g, v)| g - v).collect();
        let idx: Vec<usize> = (0..self.rollout.len()).collect();
        let g = gather(&self.rollout, &idx, &adv, &returns, self.obs_len);
        let a = &self.cfg.a2c;
        let (parts, mut grad) = a2c_loss(&self.net, &g.batch(), a.vf_coef, a.ent_coef);
        clip_grad_norm(&mut grad, a.max_grad_norm);
        self.opt.step(self.net.params_mut(), &grad);
        parts.total
    }

    fn update_ppo(&mut self, rng: &mut ChaCha8Rng) -> f64 {
        let p = self.cfg.ppo.clone();
        let values = self.rollout.values();
        let adv = gae(
            &self.rollout.rewards(),
            &self.rollout.dones(),
            &values,
            self.bootstrap(),
            self.cfg.gamma,
            p.gae_lambda,
        )
        .expect("rollout arrays share one length");
        let returns: Vec<f64> = adv.iter().zip(&values).map(|(a, v)| a + v).collect();
        let mut order: Vec<usize> = (0..self.rollout.len()).collect();
        let mut total = 0.0;
        let mut count = 0;
        for _ in 0..p.epochs {
            order.shuffle(rng);
            for chunk in order.chunks(p.minibatch) {
                let mut g = gather(&self.rollout, chunk, &adv, &returns, self.obs_len);
                normalize(&mut g.advantages);
                let (parts, mut grad) = ppo_loss(&self.net, &g.batch(), p.clip, p.vf_coef, p.ent_coef);
                clip_grad_norm(&mut grad, p.max_grad_norm);
                self.opt.step(self.net.params_mut(), &grad);
                total += parts.total;
                count += 1;
            }
        }
        total / count as f64
    }
}

fn sample_decision(policy_out: &[f64], actions: usize, mask: &[bool], value: f64, rng: &mut ChaCha8Rng) -> Result<Decision> {
    let (action, log_prob) = masked_sample(&policy_out[..actions], mask, rng)?;
    Ok(Decision {
        action,
        log_prob,
        value,
    })
}

impl Learner for ActorCriticLearner {
    fn algo(&self) -> Algo {
        self.algo
    }

    fn act(&mut self, obs: &[f64], mask: &[bool], _step: usize, rng: &mut ChaCha8Rng) -> Result<Decision> {
        let out = self.net.forward(row(obs));
        let out = out.as_slice().expect("row-major output");
        sample_decision(out, self.actions, mask, out[self.actions], rng)
    }

    fn greedy(&self, obs: &[f64], mask: &[bool]) -> Result<usize> {
        let out = self.net.forward(row(obs));
        masked_greedy(&out.as_slice().expect("row-major output")[..self.actions], mask)
    }

    fn observe(
        &mut self,
        transition: Transition,
        decision: Decision,
        _step: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<Option<UpdateStats>> {
        self.rollout.transitions.push(transition);
        self.rollout.decisions.push(decision);
        let horizon = if self.algo == Algo::Ppo {
            self.cfg.ppo.n_steps
        } else {
            self.cfg.a2c.n_steps
        };
        if self.rollout.len() < horizon {
            return Ok(None);
        }
        let loss = if self.algo == Algo::Ppo {
            self.update_ppo(rng)
        } else {
            self.update_a2c()
        };
        self.rollout.clear();
        Ok(Some(UpdateStats { loss, trpo: None }))
    }
}

/// TRPO with separate policy and value networks.
pub struct TrpoLearner {
    cfg: AlgoConfig,
    policy: Mlp,
    value: Mlp,
    value_opt: Adam,
    rollout: Rollout,
    actions: usize,
    obs_len: usize,
}

impl TrpoLearner {
    pub fn new(cfg: &AlgoConfig, obs_len: usize, actions: usize, rng: &mut ChaCha8Rng) -> Self {
        let policy = Mlp::new(net_spec(cfg, obs_len, actions), 0.01, rng);
        let value = Mlp::new(net_spec(cfg, obs_len, 1), 1.0, rng);
        Self {
            cfg: cfg.clone(),
            value_opt: Adam::new(value.param_count(), cfg.learning_rate),
            policy,
            value,
            rollout: Rollout::new(),
            actions,
            obs_len,
        }
    }

    fn update(&mut self, rng: &mut ChaCha8Rng) -> UpdateStats {
        let t = self.cfg.trpo.clone();
        let values = self.rollout.values();
        let last = self.rollout.last();
        let bootstrap = if last.done {
            0.0
        } else {
            let x: Vec<f64> = last.next_obs.iter().map(|&v| f64::from(v)).collect();
            self.value.forward(row(&x))[[0, 0]]
        };
        let mut adv = gae(
            &self.rollout.rewards(),
            &self.rollout.dones(),
            &values,
            bootstrap,
            self.cfg.gamma,
            t.gae_lambda,
        )
        .expect("rollout arrays share one length");
        let returns: Vec<f64> = adv.iter().zip(&values).map(|(a, v)| a + v).collect();
        normalize(&mut adv);
        let all: Vec<usize> = (0..self.rollout.len()).collect();
        let g = gather(&self.rollout, &all, &adv, &returns, self.obs_len);
        let batch = TrpoBatch {
            obs: g.obs.view(),
            masks: &g.masks,
            actions: &g.actions,
            advantages: &g.advantages,
        };
        let step = trpo_policy_step(&mut self.policy, &batch, &t);
        let mut order = all;
        let mut vloss = 0.0;
        let mut count = 0;
        for _ in 0..t.vf_epochs {
            order.shuffle(rng);
            for chunk in order.chunks(t.vf_minibatch) {
                let obs = obs_matrix(chunk.iter().map(|&i| &self.rollout.transitions[i].obs[..]), self.obs_len);
                let target: Vec<f64> = chunk.iter().map(|&i| returns[i]).collect();
                let (loss, grad) = value_loss(&self.value, obs.view(), &target);
                self.value_opt.step(self.value.params_mut(), &grad);
                vloss += loss;
                count += 1;
            }
        }
        UpdateStats {
            loss: vloss / count as f64,
            trpo: Some(step),
        }
    }
}

impl Learner for TrpoLearner {
    fn algo(&self) -> Algo {
        Algo::Trpo
    }

    fn act(&mut self, obs: &[f64], mask: &[bool], _step: usize, rng: &mut ChaCha8Rng) -> Result<Decision> {
        let logits = self.policy.forward(row(obs));
        let value = self.value.forward(row(obs))[[0, 0]];
        sample_decision(logits.as_slice().expect("row-major output"), self.actions, mask, value, rng)
    }

    fn greedy(&self, obs: &[f64], mask: &[bool]) -> Result<usize> {
        let logits = self.policy.forward(row(obs));
        masked_greedy(logits.as_slice().expect("row-major output"), mask)
    }

    fn observe(
        &mut self,
        transition: Transition,
        decision: Decision,
        _step: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<Option<UpdateStats>> {
        self.rollout.transitions.push(transition);
        self.rollout.decisions.push(decision);
        if self.rollout.len() < self.cfg.trpo.n_steps {
            return Ok(None);
        }
        let stats = self.update(rng);
        self.rollout.clear();
        Ok(Some(stats))
    }
}
