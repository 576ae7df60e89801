//! Quantile-regression Q-learning. The network emits `actions x quantiles` values,
//! with the estimate for action `a`, quantile `i` in output column `a * n + i`.

use ndarray::{Array2, ArrayView2};

use crate::buffer::Transition;
use crate::dist::masked_greedy;
use crate::net::Mlp;

/// Quantile midpoints `(2i - 1) / 2n` for `i = 1..=n`.
pub fn quantile_midpoints(n: usize) -> Vec<f64> {
    (1..=n).map(|i| (2 * i - 1) as f64 / (2 * n) as f64).collect()
}

fn huber(u: f64, kappa: f64) -> f64 {
    if u.abs() <= kappa {
        0.5 * u * u
    } else {
        kappa * (u.abs() - 0.5 * kappa)
    }
}

fn huber_slope(u: f64, kappa: f64) -> f64 {
    if u.abs() <= kappa {
        u
    } else {
        kappa * u.signum()
    }
}

/// `|tau - 1{u < 0}| * huber_kappa(u) / kappa` for the residual `u = target - prediction`.
pub fn quantile_huber(u: f64, tau: f64, kappa: f64) -> f64 {
    let weight = (tau - if u < 0.0 { 1.0 } else { 0.0 }).abs();
    weight * huber(u, kappa) / kappa
}

fn quantile_huber_slope(u: f64, tau: f64, kappa: f64) -> f64 {
    let weight = (tau - if u < 0.0 { 1.0 } else { 0.0 }).abs();
    weight * huber_slope(u, kappa) / kappa
}

/// Mean over quantiles of each action's estimate.
pub fn quantile_means(row: &[f64], n: usize) -> Vec<f64> {
    row.chunks(n).map(|c| c.iter().sum::<f64>() / n as f64).collect()
}

/// Target samples `r + gamma * theta'_j(s', a*)` (`r` at termination), with `a*` the
/// masked greedy action under the target network's quantile means.
pub fn qrdqn_targets(
    target: &Mlp,
    next_obs: ArrayView2<'_, f64>,
    batch: &[&Transition],
    gamma: f64,
    n: usize,
) -> Array2<f64> {
    let next = target.forward(next_obs);
    let mut out = Array2::zeros((batch.len(), n));
    for (b, t) in batch.iter().enumerate() {
        if t.done {
            out.row_mut(b).fill(t.reward);
            continue;
        }
        let row = next.row(b);
        let row = row.as_slice().expect("row-major output");
        match masked_greedy(&quantile_means(row, n), &t.next_mask) {
            Ok(a) => {
                for j in 0..n {
                    out[[b, j]] = t.reward + gamma * row[a * n + j];
                }
            }
            Err(_) => out.row_mut(b).fill(t.reward),
        }
    }
    out
}

/// Quantile Huber loss: summed over predicted quantiles, averaged over target samples
/// and the batch. Returns the loss and its parameter gradient.
pub fn qrdqn_loss(
    net: &Mlp,
    obs: ArrayView2<'_, f64>,
    actions: &[usize],
    targets: ArrayView2<'_, f64>,
    kappa: f64,
) -> (f64, Vec<f64>) {
    let n = targets.ncols();
    let taus = quantile_midpoints(n);
    let fwd = net.forward_cached(obs);
    let out = fwd.output();
    let batch = actions.len() as f64;
    let scale = 1.0 / (batch * n as f64);
    let mut d_out = Array2::zeros(out.raw_dim());
    let mut loss = 0.0;
    for (b, &a) in actions.iter().enumerate() {
        for (i, &tau) in taus.iter().enumerate() {
            let pred = out[[b, a * n + i]];
            let mut slope = 0.0;
            for j in 0..n {
                let u = targets[[b, j]] - pred;
                loss += quantile_huber(u, tau, kappa);
                slope += quantile_huber_slope(u, tau, kappa);
            }
            d_out[[b, a * n + i]] = -slope * scale;
        }
    }
    (loss * scale, net.backward(&fwd, d_out.view()))
}
