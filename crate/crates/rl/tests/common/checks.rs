//! Measured numeric checks, shared with the workspace acceptance suite. Each returns
//! the observed error so callers pick the tolerance.

use std::sync::Arc;

use ndarray::{s, Array2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use stowage_rl::dqn::dqn_loss;
use stowage_rl::policy::{a2c_loss, log_prob_rows, ppo_loss, PolicyBatch};
use stowage_rl::qrdqn::qrdqn_loss;
use stowage_rl::returns::{gae, nstep_returns};
use stowage_rl::trpo::{fisher_vector_product, kl_grad};

use super::{net, numeric_grad, random_masks, random_obs, rel_err, rng};

pub fn dqn_gradient_error() -> f64 {
    let mut r = rng(1);
    let net = net(6, 4, 2);
    let obs = random_obs(8, 6, &mut r);
    let actions: Vec<usize> = (0..8).map(|_| r.random_range(0..4)).collect();
    let targets: Vec<f64> = (0..8).map(|_| r.random_range(-3.0..3.0)).collect();
    let (_, grad) = dqn_loss(&net, obs.view(), &actions, &targets);
    let num = numeric_grad(&net, |n| dqn_loss(n, obs.view(), &actions, &targets).0);
    rel_err(&grad, &num)
}

pub fn qrdqn_gradient_error(kappa: f64) -> f64 {
    let mut r = rng(3);
    let n = 4;
    let net = net(5, 3 * n, 4);
    let obs = random_obs(6, 5, &mut r);
    let actions: Vec<usize> = (0..6).map(|_| r.random_range(0..3)).collect();
    // Spread wide enough that both the quadratic and linear Huber regimes occur.
    let targets = Array2::from_shape_fn((6, n), |_| r.random_range(-3.0..3.0));
    let (_, grad) = qrdqn_loss(&net, obs.view(), &actions, targets.view(), kappa);
    let num = numeric_grad(&net, |m| qrdqn_loss(m, obs.view(), &actions, targets.view(), kappa).0);
    rel_err(&grad, &num)
}

pub struct Fixture {
    pub obs: Array2<f64>,
    pub masks: Vec<Arc<[bool]>>,
    pub actions: Vec<usize>,
    pub adv: Vec<f64>,
    pub ret: Vec<f64>,
    pub old: Vec<f64>,
}

impl Fixture {
    pub fn new(seed: u64, rows: usize, actions: usize) -> Self {
        let mut r = rng(seed);
        let obs = random_obs(rows, 6, &mut r);
        let (masks, chosen) = random_masks(rows, actions, &mut r);
        Self {
            obs,
            masks,
            actions: chosen,
            adv: (0..rows).map(|_| r.random_range(-2.0..2.0)).collect(),
            ret: (0..rows).map(|_| r.random_range(-5.0..5.0)).collect(),
            old: vec![0.0; rows],
        }
    }

    pub fn batch(&self) -> PolicyBatch<'_> {
        PolicyBatch {
            obs: self.obs.view(),
            masks: &self.masks,
            actions: &self.actions,
            advantages: &self.adv,
            returns: &self.ret,
            old_log_probs: &self.old,
        }
    }
}

pub fn a2c_gradient_error() -> f64 {
    let f = Fixture::new(5, 10, 5);
    let net = net(6, 6, 6);
    let (_, grad) = a2c_loss(&net, &f.batch(), 0.5, 0.01);
    let num = numeric_grad(&net, |n| a2c_loss(n, &f.batch(), 0.5, 0.01).0.total);
    rel_err(&grad, &num)
}

pub fn ppo_gradient_error() -> f64 {
    let mut f = Fixture::new(7, 10, 5);
    let net = net(6, 6, 8);
    // Behaviour log-probs near the current ones so some ratios fall inside and some
    // outside the clip range.
    let out = net.forward(f.obs.view());
    let lp = log_prob_rows(out.slice(s![.., ..5]), &f.masks);
    let mut r = rng(9);
    f.old = (0..10)
        .map(|b| lp[[b, f.actions[b]]] + r.random_range(-0.5..0.5))
        .collect();
    let (_, grad) = ppo_loss(&net, &f.batch(), 0.2, 0.5, 0.01);
    let num = numeric_grad(&net, |n| ppo_loss(n, &f.batch(), 0.2, 0.5, 0.01).0.total);
    rel_err(&grad, &num)
}

/// Worst relative error of the Fisher-vector product against central differences of
/// the KL gradient, over three random directions.
pub fn fisher_vector_product_error() -> f64 {
    let mut r = rng(31);
    let policy = net(6, 5, 32);
    let obs = random_obs(12, 6, &mut r);
    let (masks, _) = random_masks(12, 5, &mut r);
    let fwd = policy.forward_cached(obs.view());
    let old = log_prob_rows(fwd.output().view(), &masks);
    let probs = old.mapv(|l| if l.is_finite() { l.exp() } else { 0.0 });
    let base = policy.params().to_vec();
    let mut worst: f64 = 0.0;
    for _ in 0..3 {
        let v: Vec<f64> = (0..base.len()).map(|_| r.random_range(-1.0..1.0)).collect();
        let fv = fisher_vector_product(&policy, &fwd, &probs, &v, 0.0);
        let eps = 1e-5;
        let mut probe = policy.clone();
        let mut shifted = |sign: f64| {
            let p: Vec<f64> = base.iter().zip(&v).map(|(b, d)| b + sign * eps * d).collect();
            probe.set_params(&p);
            kl_grad(&probe, obs.view(), &masks, &old)
        };
        let up = shifted(1.0);
        let down = shifted(-1.0);
        let num: Vec<f64> = up.iter().zip(&down).map(|(a, b)| (a - b) / (2.0 * eps)).collect();
        worst = worst.max(rel_err(&fv, &num));
    }
    worst
}

pub struct Trajectory {
    pub rewards: Vec<f64>,
    pub dones: Vec<bool>,
    pub values: Vec<f64>,
    pub bootstrap: f64,
}

pub fn random_trajectory(r: &mut ChaCha8Rng) -> Trajectory {
    let len = r.random_range(1..=10);
    Trajectory {
        rewards: (0..len).map(|_| r.random_range(-3.0..1.0)).collect(),
        dones: (0..len).map(|_| r.random_bool(0.2)).collect(),
        values: (0..len).map(|_| r.random_range(-5.0..5.0)).collect(),
        bootstrap: r.random_range(-5.0..5.0),
    }
}

/// Value following step `t`: 0 after a termination, else the next stored value.
fn next_value(tr: &Trajectory, t: usize) -> f64 {
    if tr.dones[t] {
        0.0
    } else if t + 1 < tr.rewards.len() {
        tr.values[t + 1]
    } else {
        tr.bootstrap
    }
}

pub fn brute_nstep(tr: &Trajectory, n: usize, gamma: f64) -> Vec<f64> {
    let len = tr.rewards.len();
    (0..len)
        .map(|t| {
            let mut g = 0.0;
            for j in 0..n {
                let i = t + j;
                if i >= len {
                    // Ran off the end of the rollout: bootstrap from the last state.
                    return g + gamma.powi(j as i32) * tr.bootstrap;
                }
                g += gamma.powi(j as i32) * tr.rewards[i];
                if tr.dones[i] {
                    return g;
                }
                if j == n - 1 {
                    return g + gamma.powi(n as i32) * next_value(tr, i);
                }
            }
            unreachable!()
        })
        .collect()
}

pub fn brute_gae(tr: &Trajectory, gamma: f64, lambda: f64) -> Vec<f64> {
    let len = tr.rewards.len();
    let delta: Vec<f64> = (0..len)
        .map(|t| tr.rewards[t] + gamma * next_value(tr, t) - tr.values[t])
        .collect();
    (0..len)
        .map(|t| {
            let mut sum = 0.0;
            for j in 0..(len - t) {
                sum += (gamma * lambda).powi(j as i32) * delta[t + j];
                if tr.dones[t + j] {
                    break;
                }
            }
            sum
        })
        .collect()
}

/// Largest absolute gap between the fast n-step/GAE code and brute-force sums over
/// `count` random trajectories.
pub fn returns_max_error(count: usize) -> f64 {
    let mut r = rng(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let tr = random_trajectory(&mut r);
        let gamma = r.random_range(0.5..1.0);
        let lambda = r.random_range(0.0..1.0);
        let n = r.random_range(1..=6);
        let fast = nstep_returns(&tr.rewards, &tr.dones, &tr.values, tr.bootstrap, n, gamma).unwrap();
        for (a, b) in fast.iter().zip(brute_nstep(&tr, n, gamma)) {
            worst = worst.max((a - b).abs());
        }
        let fast = gae(&tr.rewards, &tr.dones, &tr.values, tr.bootstrap, gamma, lambda).unwrap();
        for (a, b) in fast.iter().zip(brute_gae(&tr, gamma, lambda)) {
            worst = worst.max((a - b).abs());
        }
    }
    worst
}
