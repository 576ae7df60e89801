//! Trust-region policy step: conjugate gradient on Fisher-vector products followed by
//! a backtracking line search on the surrogate under a mean-KL bound.

use std::sync::Arc;

use ndarray::{Array2, ArrayView2};

use crate::config::TrpoConfig;
use crate::net::{Forward, Mlp};
use crate::policy::log_prob_rows;

/// Rollout data seen by the policy step.
#[derive(Debug, Clone, Copy)]
pub struct TrpoBatch<'a> {
    pub obs: ArrayView2<'a, f64>,
    pub masks: &'a [Arc<[bool]>],
    pub actions: &'a [usize],
    pub advantages: &'a [f64],
}

#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize, serde::Deserialize)]
pub struct TrpoStep {
    /// Mean KL(old || new) after the step; 0 when rejected.
    pub kl: f64,
    pub accepted: bool,
    pub backtracks: usize,
    pub improvement: f64,
    /// `sqrt(2 delta / x^T (F + damping I) x)`.
    pub step_scale: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Policy log-probabilities of every action, `batch x actions`.
pub fn policy_log_probs(policy: &Mlp, obs: ArrayView2<'_, f64>, masks: &[Arc<[bool]>]) -> Array2<f64> {
    log_prob_rows(policy.forward(obs).view(), masks)
}

/// `mean_b exp(log pi(a_b) - old_b) * A_b`.
pub fn surrogate(policy: &Mlp, batch: &TrpoBatch<'_>, old: &Array2<f64>) -> f64 {
    let lp = policy_log_probs(policy, batch.obs, batch.masks);
    (0..batch.actions.len())
        .map(|b| {
            let a = batch.actions[b];
            (lp[[b, a]] - old[[b, a]]).exp() * batch.advantages[b]
        })
        .sum::<f64>()
        / batch.actions.len() as f64
}

/// Gradient of the surrogate at the current parameters.
pub fn surrogate_grad(policy: &Mlp, batch: &TrpoBatch<'_>, old: &Array2<f64>) -> Vec<f64> {
    let fwd = policy.forward_cached(batch.obs);
    let lp = log_prob_rows(fwd.output().view(), batch.masks);
    let n = batch.actions.len() as f64;
    let mut d = Array2::zeros(lp.raw_dim());
    for b in 0..batch.actions.len() {
        let a = batch.actions[b];
        let w = (lp[[b, a]] - old[[b, a]]).exp() * batch.advantages[b] / n;
        for j in 0..lp.ncols() {
            if lp[[b, j]].is_finite() {
                let onehot = if j == a { 1.0 } else { 0.0 };
                d[[b, j]] = w * (onehot - lp[[b, j]].exp());
            }
        }
    }
    policy.backward(&fwd, d.view())
}

/// Mean KL divergence from the `old` log-probabilities to the current policy.
pub fn mean_kl(policy: &Mlp, obs: ArrayView2<'_, f64>, masks: &[Arc<[bool]>], old: &Array2<f64>) -> f64 {
    let lp = policy_log_probs(policy, obs, masks);
    let mut total = 0.0;
    for (o, n) in old.iter().zip(lp.iter()) {
        if o.is_finite() {
            total += o.exp() * (o - n);
        }
    }
    total / old.nrows() as f64
}

/// Gradient of [`mean_kl`] with respect to the policy parameters.
pub fn kl_grad(policy: &Mlp, obs: ArrayView2<'_, f64>, masks: &[Arc<[bool]>], old: &Array2<f64>) -> Vec<f64> {
    let fwd = policy.forward_cached(obs);
    let lp = log_prob_rows(fwd.output().view(), masks);
    let n = old.nrows() as f64;
    let mut d = Array2::zeros(lp.raw_dim());
    for ((dv, &l), &o) in d.iter_mut().zip(lp.iter()).zip(old.iter()) {
        if l.is_finite() {
            *dv = (l.exp() - o.exp()) / n;
        }
    }
    policy.backward(&fwd, d.view())
}

/// Fisher-vector product `(J^T M J / B + damping I) v`, with `J` the Jacobian of the
/// logits and `M = diag(p) - p p^T` per row, both taken at the cached forward pass.
pub fn fisher_vector_product(policy: &Mlp, fwd: &Forward, probs: &Array2<f64>, v: &[f64], damping: f64) -> Vec<f64> {
    let jv = policy.jvp(fwd, v);
    let n = probs.nrows() as f64;
    let mut w = Array2::zeros(jv.raw_dim());
    for b in 0..probs.nrows() {
        let p = probs.row(b);
        let u = jv.row(b);
        let pu = p.dot(&u);
        for j in 0..probs.ncols() {
            w[[b, j]] = p[j] * (u[j] - pu) / n;
        }
    }
    let mut out = policy.backward(fwd, w.view());
    for (o, &x) in out.iter_mut().zip(v) {
        *o += damping * x;
    }
    out
}

/// Solves `A x = b` for symmetric positive definite `A` given as a product closure.
pub fn conjugate_gradient<F>(apply: F, b: &[f64], iters: usize) -> Vec<f64>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let mut x = vec![0.0; b.len()];
    let mut r = b.to_vec();
    let mut p = b.to_vec();
    let mut rr = dot(&r, &r);
    for _ in 0..iters {
        if rr < 1e-20 {
            break;
        }
        let ap = apply(&p);
        let alpha = rr / dot(&p, &ap);
        for i in 0..x.len() {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let next = dot(&r, &r);
        let beta = next / rr;
        for i in 0..p.len() {
            p[i] = r[i] + beta * p[i];
        }
        rr = next;
    }
    x
}

/// One constrained policy update. On line-search failure the parameters are restored
/// and the step is reported as rejected.
pub fn trpo_policy_step(policy: &mut Mlp, batch: &TrpoBatch<'_>, cfg: &TrpoConfig) -> TrpoStep {
    let fwd = policy.forward_cached(batch.obs);
    let old = log_prob_rows(fwd.output().view(), batch.masks);
    let probs = old.mapv(|l| if l.is_finite() { l.exp() } else { 0.0 });
    let g = surrogate_grad(policy, batch, &old);
    if dot(&g, &g) == 0.0 {
        return TrpoStep::default();
    }
    let fvp = |v: &[f64]| fisher_vector_product(policy, &fwd, &probs, v, cfg.cg_damping);
    let x = conjugate_gradient(fvp, &g, cfg.cg_iters);
    let xfx = dot(&x, &fvp(&x));
    if xfx.is_nan() || xfx <= 0.0 {
        return TrpoStep::default();
    }
    let scale = (2.0 * cfg.max_kl / xfx).sqrt();
    let base = policy.params().to_vec();
    let before = surrogate(policy, batch, &old);
    let mut frac = 1.0;
    for k in 0..=cfg.max_backtracks {
        let candidate: Vec<f64> = base.iter().zip(&x).map(|(p, d)| p + frac * scale * d).collect();
        policy.set_params(&candidate);
        let kl = mean_kl(policy, batch.obs, batch.masks, &old);
        let improvement = surrogate(policy, batch, &old) - before;
        if kl <= cfg.max_kl && improvement > 0.0 {
            return TrpoStep {
                kl,
                accepted: true,
                backtracks: k,
                improvement,
                step_scale: scale,
            };
        }
        frac *= cfg.backtrack_coeff;
    }
    policy.set_params(&base);
    TrpoStep {
        backtracks: cfg.max_backtracks,
        step_scale: scale,
        ..TrpoStep::default()
    }
}
