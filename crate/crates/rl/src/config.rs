//! Hyperparameters for the five learners. Every field has a default so a JSON
//! override only needs the values it changes.

use serde::{Deserialize, Serialize};

use crate::error::{Result, RlError};
use crate::net::Activation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algo {
    Dqn,
    Qrdqn,
    A2c,
    Ppo,
    Trpo,
}

impl Algo {
    pub const ALL: [Algo; 5] = [Algo::Dqn, Algo::Qrdqn, Algo::A2c, Algo::Ppo, Algo::Trpo];

    pub fn name(self) -> &'static str {
        match self {
            Algo::Dqn => "dqn",
            Algo::Qrdqn => "qrdqn",
            Algo::A2c => "a2c",
            Algo::Ppo => "ppo",
            Algo::Trpo => "trpo",
        }
    }
}

impl std::fmt::Display for Algo {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Algo {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Algo::ALL
            .into_iter()
            .find(|a| a.name() == s.to_ascii_lowercase())
            .ok_or_else(|| format!("unknown algorithm '{s}', expected one of dqn, qrdqn, a2c, ppo, trpo"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DqnConfig {
    pub buffer_size: usize,
    pub batch_size: usize,
    /// Target network copy interval, in gradient updates.
    pub target_sync: usize,
    pub eps_start: f64,
    pub eps_end: f64,
    /// Fraction of the training budget over which epsilon decays linearly.
    pub eps_fraction: f64,
    /// Environment steps between gradient updates.
    pub train_freq: usize,
    pub learning_starts: usize,
    pub max_grad_norm: f64,
}

impl Default for DqnConfig {
    fn default() -> Self {
        Self {
            buffer_size: 50_000,
            batch_size: 64,
            target_sync: 1_000,
            eps_start: 1.0,
            eps_end: 0.05,
            eps_fraction: 0.1,
            train_freq: 4,
            learning_starts: 1_000,
            max_grad_norm: 10.0,
        }
    }
}

impl DqnConfig {
    pub fn epsilon(&self, step: usize, total_timesteps: usize) -> f64 {
        let horizon = self.eps_fraction * total_timesteps as f64;
        if horizon <= 0.0 {
            return self.eps_end;
        }
        let frac = step as f64 / horizon;
        if frac >= 1.0 {
            return self.eps_end;
        }
        self.eps_start + frac * (self.eps_end - self.eps_start)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QrDqnConfig {
    pub quantiles: usize,
    pub kappa: f64,
}

impl Default for QrDqnConfig {
    fn default() -> Self {
        Self { quantiles: 32, kappa: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct A2cConfig {
    pub n_steps: usize,
    pub vf_coef: f64,
    pub ent_coef: f64,
    pub max_grad_norm: f64,
}

impl Default for A2cConfig {
    fn default() -> Self {
        Self {
            n_steps: 5,
            vf_coef: 0.5,
            ent_coef: 0.01,
            max_grad_norm: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PpoConfig {
    pub clip: f64,
    pub epochs: usize,
    pub gae_lambda: f64,
    pub minibatch: usize,
    pub n_steps: usize,
    pub vf_coef: f64,
    pub ent_coef: f64,
    pub max_grad_norm: f64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            clip: 0.2,
            epochs: 10,
            gae_lambda: 0.95,
            minibatch: 64,
            n_steps: 2048,
            vf_coef: 0.5,
            ent_coef: 0.0,
            max_grad_norm: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrpoConfig {
    pub max_kl: f64,
    pub cg_iters: usize,
    pub backtrack_coeff: f64,
    pub max_backtracks: usize,
    pub gae_lambda: f64,
    pub cg_damping: f64,
    pub n_steps: usize,
    /// Value-network regression epochs per rollout.
    pub vf_epochs: usize,
    pub vf_minibatch: usize,
}

impl Default for TrpoConfig {
    fn default() -> Self {
        Self {
            max_kl: 0.01,
            cg_iters: 10,
            backtrack_coeff: 0.8,
            max_backtracks: 10,
            gae_lambda: 0.95,
            cg_damping: 0.1,
            n_steps: 2048,
            vf_epochs: 10,
            vf_minibatch: 128,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlgoConfig {
    pub gamma: f64,
    pub learning_rate: f64,
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub dqn: DqnConfig,
    pub qrdqn: QrDqnConfig,
    pub a2c: A2cConfig,
    pub ppo: PpoConfig,
    pub trpo: TrpoConfig,
}

impl Default for AlgoConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            learning_rate: 3e-4,
            hidden: vec![256, 256],
            activation: Activation::Tanh,
            dqn: DqnConfig::default(),
            qrdqn: QrDqnConfig::default(),
            a2c: A2cConfig::default(),
            ppo: PpoConfig::default(),
            trpo: TrpoConfig::default(),
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(RlError::Config(format!("{name} must be positive, got {v}")))
    }
}

fn nonzero(name: &str, v: usize) -> Result<()> {
    if v > 0 {
        Ok(())
    } else {
        Err(RlError::Config(format!("{name} must be positive")))
    }
}

fn unit(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(RlError::Config(format!("{name} must lie in [0, 1], got {v}")))
    }
}

impl AlgoConfig {
    pub fn validate(&self) -> Result<()> {
        unit("gamma", self.gamma)?;
        positive("learning_rate", self.learning_rate)?;
        if self.hidden.contains(&0) {
            return Err(RlError::Config("hidden layer widths must be positive".into()));
        }
        let d = &self.dqn;
        nonzero("dqn.buffer_size", d.buffer_size)?;
        nonzero("dqn.batch_size", d.batch_size)?;
        nonzero("dqn.target_sync", d.target_sync)?;
        nonzero("dqn.train_freq", d.train_freq)?;
        unit("dqn.eps_start", d.eps_start)?;
        unit("dqn.eps_end", d.eps_end)?;
        unit("dqn.eps_fraction", d.eps_fraction)?;
        if d.eps_end > d.eps_start {
            return Err(RlError::Config("epsilon schedule must not increase".into()));
        }
        positive("dqn.max_grad_norm", d.max_grad_norm)?;
        nonzero("qrdqn.quantiles", self.qrdqn.quantiles)?;
        positive("qrdqn.kappa", self.qrdqn.kappa)?;
        let a = &self.a2c;
        nonzero("a2c.n_steps", a.n_steps)?;
        positive("a2c.vf_coef", a.vf_coef)?;
        if a.ent_coef < 0.0 {
            return Err(RlError::Config("a2c.ent_coef must be non-negative".into()));
        }
        positive("a2c.max_grad_norm", a.max_grad_norm)?;
        let p = &self.ppo;
        positive("ppo.clip", p.clip)?;
        nonzero("ppo.epochs", p.epochs)?;
        unit("ppo.gae_lambda", p.gae_lambda)?;
        nonzero("ppo.minibatch", p.minibatch)?;
        nonzero("ppo.n_steps", p.n_steps)?;
        positive("ppo.vf_coef", p.vf_coef)?;
        if p.ent_coef < 0.0 {
            return Err(RlError::Config("ppo.ent_coef must be non-negative".into()));
        }
        positive("ppo.max_grad_norm", p.max_grad_norm)?;
        let t = &self.trpo;
        positive("trpo.max_kl", t.max_kl)?;
        nonzero("trpo.cg_iters", t.cg_iters)?;
        if !(t.backtrack_coeff > 0.0 && t.backtrack_coeff < 1.0) {
            return Err(RlError::Config("trpo.backtrack_coeff must lie in (0, 1)".into()));
        }
        unit("trpo.gae_lambda", t.gae_lambda)?;
        if t.cg_damping < 0.0 {
            return Err(RlError::Config("trpo.cg_damping must be non-negative".into()));
        }
        nonzero("trpo.n_steps", t.n_steps)?;
        nonzero("trpo.vf_epochs", t.vf_epochs)?;
        nonzero("trpo.vf_minibatch", t.vf_minibatch)?;
        Ok(())
    }
}
