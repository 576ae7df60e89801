mod common;

use common::checks::fisher_vector_product_error;
use common::*;
use rand::Rng;
use stowage_rl::policy::log_prob_rows;
use stowage_rl::trpo::{
    conjugate_gradient, fisher_vector_product, kl_grad, mean_kl, surrogate_grad, trpo_policy_step, TrpoBatch,
};
use stowage_rl::TrpoConfig;

#[test]
fn fisher_vector_product_matches_kl_gradient_differences() {
    let err = fisher_vector_product_error();
    assert!(err < 1e-3, "relative error {err}");
}

#[test]
fn kl_and_its_gradient_vanish_at_the_reference_policy() {
    let mut r = rng(31);
    let policy = net(6, 5, 32);
    let obs = random_obs(12, 6, &mut r);
    let (masks, _) = random_masks(12, 5, &mut r);
    let old = log_prob_rows(policy.forward(obs.view()).view(), &masks);
    let g0 = kl_grad(&policy, obs.view(), &masks, &old);
    assert!(g0.iter().all(|g| g.abs() < 1e-12));
    assert!(mean_kl(&policy, obs.view(), &masks, &old).abs() < 1e-15);
}

#[test]
fn unconstrained_step_is_the_scaled_cg_solution() {
    let mut r = rng(41);
    let mut policy = net(6, 4, 42);
    let obs = random_obs(20, 6, &mut r);
    let (masks, actions) = random_masks(20, 4, &mut r);
    let advantages: Vec<f64> = (0..20).map(|_| r.random_range(-1.0..1.0)).collect();
    let batch = TrpoBatch {
        obs: obs.view(),
        masks: &masks,
        actions: &actions,
        advantages: &advantages,
    };
    let cfg = TrpoConfig {
        max_kl: 1e-4,
        ..TrpoConfig::default()
    };
    let before = policy.params().to_vec();
    let fwd = policy.forward_cached(obs.view());
    let old = log_prob_rows(fwd.output().view(), &masks);
    let probs = old.mapv(|l| if l.is_finite() { l.exp() } else { 0.0 });
    let g = surrogate_grad(&policy, &batch, &old);
    let x = conjugate_gradient(
        |v| fisher_vector_product(&policy, &fwd, &probs, v, cfg.cg_damping),
        &g,
        cfg.cg_iters,
    );
    let fx = fisher_vector_product(&policy, &fwd, &probs, &x, cfg.cg_damping);
    let scale = (2.0 * cfg.max_kl / x.iter().zip(&fx).map(|(a, b)| a * b).sum::<f64>()).sqrt();

    let step = trpo_policy_step(&mut policy, &batch, &cfg);
    assert!(step.accepted);
    assert_eq!(step.backtracks, 0);
    assert!((step.step_scale - scale).abs() < 1e-12 * scale);
    for ((after, b), d) in policy.params().iter().zip(&before).zip(&x) {
        assert!((after - b - scale * d).abs() < 1e-12);
    }
    assert!(step.kl <= cfg.max_kl && step.kl > 0.0);
    assert!(step.improvement > 0.0);
}

#[test]
fn every_step_is_within_the_bound_or_fully_reverted() {
    let mut rejected = 0;
    for seed in 0..20 {
        let mut r = rng(100 + seed);
        let mut policy = net(6, 4, 200 + seed);
        let obs = random_obs(10, 6, &mut r);
        let (masks, actions) = random_masks(10, 4, &mut r);
        let advantages: Vec<f64> = (0..10).map(|_| r.random_range(-1.0..1.0)).collect();
        let batch = TrpoBatch {
            obs: obs.view(),
            masks: &masks,
            actions: &actions,
            advantages: &advantages,
        };
        // No backtracking: a full step overshooting the bound must be undone.
        let cfg = TrpoConfig {
            max_kl: 0.05,
            max_backtracks: 0,
            ..TrpoConfig::default()
        };
        let before = policy.params().to_vec();
        let fwd = policy.forward_cached(obs.view());
        let old = log_prob_rows(fwd.output().view(), &masks);
        let step = trpo_policy_step(&mut policy, &batch, &cfg);
        if step.accepted {
            let kl = mean_kl(&policy, obs.view(), &masks, &old);
            assert!((kl - step.kl).abs() < 1e-12 && kl <= cfg.max_kl);
        } else {
            rejected += 1;
            assert_eq!(policy.params(), &before[..]);
            assert_eq!(step.kl, 0.0);
        }
    }
    assert!(rejected < 20);
}
