//! Bootstrapped returns and advantage estimates over a rollout.
//!
//! A rollout of length `T` is described by per-step rewards `r_t` (received after the
//! action at step `t`), termination flags `done_t` (the episode ended with that
//! step), state values `V(s_t)` and the value of the state following the last step.

use crate::error::{Result, RlError};

fn check(rewards: &[f64], dones: &[bool], values: &[f64]) -> Result<()> {
    if rewards.len() != dones.len() || rewards.len() != values.len() {
        return Err(RlError::Shape(format!(
            "rollout with {} rewards, {} dones, {} values",
            rewards.len(),
            dones.len(),
            values.len()
        )));
    }
    Ok(())
}

/// One-step bootstrapped target `r + gamma * max_valid Q'(s', a')`, or `r` at termination.
pub fn td_target(reward: f64, done: bool, next_q: &[f64], next_mask: &[bool], gamma: f64) -> f64 {
    if done {
        return reward;
    }
    let best = next_q
        .iter()
        .zip(next_mask)
        .filter(|(_, &m)| m)
        .map(|(&q, _)| q)
        .fold(f64::NEG_INFINITY, f64::max);
    if best.is_finite() {
        reward + gamma * best
    } else {
        reward
    }
}

/// `G_t = sum_{j<h} gamma^j r_{t+j} + gamma^h V(s_{t+h})` with `h = min(n, T - t)`,
/// cut at the first termination (no bootstrap past it).
pub fn nstep_returns(
    rewards: &[f64],
    dones: &[bool],
    values: &[f64],
    bootstrap_value: f64,
    n: usize,
    gamma: f64,
) -> Result<Vec<f64>> {
    check(rewards, dones, values)?;
    if n == 0 {
        return Err(RlError::Config("n-step horizon must be positive".into()));
    }
    let len = rewards.len();
    let mut out = Vec::with_capacity(len);
    for t in 0..len {
        let mut g = 0.0;
        let mut discount = 1.0;
        let mut terminated = false;
        let mut h = 0;
        while h < n && t + h < len {
            g += discount * rewards[t + h];
            discount *= gamma;
            h += 1;
            if dones[t + h - 1] {
                terminated = true;
                break;
            }
        }
        if !terminated {
            let v = if t + h < len { values[t + h] } else { bootstrap_value };
            g += discount * v;
        }
        out.push(g);
    }
    Ok(out)
}

/// Generalized advantage estimates `A_t = sum_j (gamma lambda)^j delta_{t+j}`.
pub fn gae(
    rewards: &[f64],
    dones: &[bool],
    values: &[f64],
    bootstrap_value: f64,
    gamma: f64,
    lambda: f64,
) -> Result<Vec<f64>> {
    check(rewards, dones, values)?;
    let len = rewards.len();
    let mut adv = vec![0.0; len];
    let mut running = 0.0;
    for t in (0..len).rev() {
        let next_value = if t + 1 < len { values[t + 1] } else { bootstrap_value };
        let live = if dones[t] { 0.0 } else { 1.0 };
        let delta = rewards[t] + gamma * next_value * live - values[t];
        running = delta + gamma * lambda * live * running;
        adv[t] = running;
    }
    Ok(adv)
}

/// Per-batch standardization to zero mean and unit variance.
pub fn normalize(xs: &mut [f64]) {
    if xs.len() < 2 {
        return;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt() + 1e-8;
    xs.iter_mut().for_each(|x| *x = (*x - mean) / std);
}
