//! Scalar Q-learning loss with a frozen target network.

use ndarray::{Array2, ArrayView2};

use crate::buffer::Transition;
use crate::net::Mlp;
use crate::returns::td_target;

/// Bootstrapped targets for a batch, evaluated with `target`.
pub fn dqn_targets(target: &Mlp, next_obs: ArrayView2<'_, f64>, batch: &[&Transition], gamma: f64) -> Vec<f64> {
    let next_q = target.forward(next_obs);
    batch
        .iter()
        .enumerate()
        .map(|(b, t)| {
            let row = next_q.row(b);
            td_target(
                t.reward,
                t.done,
                row.as_slice().expect("row-major output"),
                &t.next_mask,
                gamma,
            )
        })
        .collect()
}

/// Mean squared TD error `mean_b (Q(s_b, a_b) - y_b)^2` and its parameter gradient.
pub fn dqn_loss(net: &Mlp, obs: ArrayView2<'_, f64>, actions: &[usize], targets: &[f64]) -> (f64, Vec<f64>) {
    let fwd = net.forward_cached(obs);
    let q = fwd.output();
    let batch = actions.len() as f64;
    let mut d_out = Array2::zeros(q.raw_dim());
    let mut loss = 0.0;
    for (b, (&a, &y)) in actions.iter().zip(targets).enumerate() {
        let err = q[[b, a]] - y;
        loss += err * err;
        d_out[[b, a]] = 2.0 * err / batch;
    }
    (loss / batch, net.backward(&fwd, d_out.view()))
}
