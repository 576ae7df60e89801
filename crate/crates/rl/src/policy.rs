//! Masked policy-gradient losses for a shared actor-critic network whose output row is
//! `[logits_0 .. logits_{A-1}, value]`.

use std::sync::Arc;

use ndarray::{Array2, ArrayView2};

use crate::dist::masked_log_softmax;
use crate::net::Mlp;

/// Row-wise masked log-softmax of a `batch x actions` logit matrix.
pub fn log_prob_rows(logits: ArrayView2<'_, f64>, masks: &[Arc<[bool]>]) -> Array2<f64> {
    let mut out = Array2::zeros(logits.raw_dim());
    for (b, mask) in masks.iter().enumerate() {
        let row: Vec<f64> = logits.row(b).to_vec();
        let lp = masked_log_softmax(&row, mask).expect("stored masks have a valid action");
        out.row_mut(b).assign(&ndarray::ArrayView1::from(&lp));
    }
    out
}

fn row_entropy(lp: ndarray::ArrayView1<'_, f64>) -> f64 {
    -lp.iter().filter(|l| l.is_finite()).map(|&l| l.exp() * l).sum::<f64>()
}

/// On-policy minibatch.
#[derive(Debug, Clone, Copy)]
pub struct PolicyBatch<'a> {
    pub obs: ArrayView2<'a, f64>,
    pub masks: &'a [Arc<[bool]>],
    pub actions: &'a [usize],
    pub advantages: &'a [f64],
    pub returns: &'a [f64],
    /// Behaviour log-probabilities of the taken actions; only PPO reads them.
    pub old_log_probs: &'a [f64],
}

impl PolicyBatch<'_> {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossParts {
    pub policy: f64,
    pub value: f64,
    pub entropy: f64,
    pub total: f64,
}

/// Gradient assembly shared by A2C and PPO. `coef[b]` is d(total)/d(log pi(a_b|s_b)).
fn assemble(
    net: &Mlp,
    batch: &PolicyBatch<'_>,
    coef: &[f64],
    vf_coef: f64,
    ent_coef: f64,
    mut parts: LossParts,
) -> (LossParts, Vec<f64>) {
    let fwd = net.forward_cached(batch.obs);
    let out = fwd.output();
    let actions = out.ncols() - 1;
    let lp = log_prob_rows(out.slice(ndarray::s![.., ..actions]), batch.masks);
    let n = batch.len() as f64;
    let mut d_out = Array2::zeros(out.raw_dim());
    let mut value_loss = 0.0;
    let mut entropy = 0.0;
    for b in 0..batch.len() {
        let h = row_entropy(lp.row(b));
        entropy += h;
        for j in 0..actions {
            let l = lp[[b, j]];
            if !l.is_finite() {
                continue;
            }
            let p = l.exp();
            let onehot = if j == batch.actions[b] { 1.0 } else { 0.0 };
            // d H / d logit_j = -p_j (log p_j + H); the entropy enters with weight -ent_coef / n.
            d_out[[b, j]] = coef[b] * (onehot - p) + ent_coef / n * p * (l + h);
        }
        let err = out[[b, actions]] - batch.returns[b];
        value_loss += err * err;
        d_out[[b, actions]] = 2.0 * vf_coef * err / n;
    }
    parts.value = value_loss / n;
    parts.entropy = entropy / n;
    parts.total = parts.policy + vf_coef * parts.value - ent_coef * parts.entropy;
    (parts, net.backward(&fwd, d_out.view()))
}

/// `-mean(A log pi(a|s)) + vf_coef * mean((G - V)^2) - ent_coef * mean(H)`.
pub fn a2c_loss(net: &Mlp, batch: &PolicyBatch<'_>, vf_coef: f64, ent_coef: f64) -> (LossParts, Vec<f64>) {
    let out = net.forward(batch.obs);
    let actions = out.ncols() - 1;
    let lp = log_prob_rows(out.slice(ndarray::s![.., ..actions]), batch.masks);
    let n = batch.len() as f64;
    let policy = -(0..batch.len())
        .map(|b| batch.advantages[b] * lp[[b, batch.actions[b]]])
        .sum::<f64>()
        / n;
    let coef: Vec<f64> = batch.advantages.iter().map(|a| -a / n).collect();
    let parts = LossParts {
        policy,
        ..LossParts::default()
    };
    assemble(net, batch, &coef, vf_coef, ent_coef, parts)
}

/// Clipped surrogate `-mean(min(rho A, clip(rho, 1 - eps, 1 + eps) A))` plus the same
/// value and entropy terms as A2C.
pub fn ppo_loss(
    net: &Mlp,
    batch: &PolicyBatch<'_>,
    clip: f64,
    vf_coef: f64,
    ent_coef: f64,
) -> (LossParts, Vec<f64>) {
    let out = net.forward(batch.obs);
    let actions = out.ncols() - 1;
    let lp = log_prob_rows(out.slice(ndarray::s![.., ..actions]), batch.masks);
    let n = batch.len() as f64;
    let mut policy = 0.0;
    let mut coef = vec![0.0; batch.len()];
    for b in 0..batch.len() {
        let ratio = (lp[[b, batch.actions[b]]] - batch.old_log_probs[b]).exp();
        let adv = batch.advantages[b];
        let clipped = ratio.clamp(1.0 - clip, 1.0 + clip);
        policy -= (ratio * adv).min(clipped * adv);
        let flat = (adv >= 0.0 && ratio > 1.0 + clip) || (adv < 0.0 && ratio < 1.0 - clip);
        if !flat {
            coef[b] = -ratio * adv / n;
        }
    }
    let parts = LossParts {
        policy: policy / n,
        ..LossParts::default()
    };
    assemble(net, batch, &coef, vf_coef, ent_coef, parts)
}

/// `mean((V(s) - G)^2)` for a single-output value network.
pub fn value_loss(net: &Mlp, obs: ArrayView2<'_, f64>, returns: &[f64]) -> (f64, Vec<f64>) {
    let fwd = net.forward_cached(obs);
    let out = fwd.output();
    let n = returns.len() as f64;
    let mut d_out = Array2::zeros(out.raw_dim());
    let mut loss = 0.0;
    for (b, &g) in returns.iter().enumerate() {
        let err = out[[b, 0]] - g;
        loss += err * err;
        d_out[[b, 0]] = 2.0 * err / n;
    }
    (loss / n, net.backward(&fwd, d_out.view()))
}
