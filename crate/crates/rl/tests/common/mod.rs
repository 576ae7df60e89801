#![allow(dead_code)]

pub mod checks;

use std::sync::Arc;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stowage_rl::{Activation, Mlp, NetworkSpec};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn net(input: usize, output: usize, seed: u64) -> Mlp {
    let spec = NetworkSpec {
        input_dim: input,
        hidden: vec![32, 32],
        activation: Activation::Tanh,
        output_dim: output,
    };
    Mlp::new(spec, 1.0, &mut rng(seed))
}

pub fn random_obs(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-1.0..1.0))
}

/// Random masks with at least one valid entry, plus a valid action per row.
pub fn random_masks(rows: usize, actions: usize, rng: &mut ChaCha8Rng) -> (Vec<Arc<[bool]>>, Vec<usize>) {
    let mut masks = Vec::new();
    let mut chosen = Vec::new();
    for _ in 0..rows {
        let mut m: Vec<bool> = (0..actions).map(|_| rng.random_bool(0.6)).collect();
        m[rng.random_range(0..actions)] = true;
        let valid: Vec<usize> = (0..actions).filter(|&a| m[a]).collect();
        chosen.push(valid[rng.random_range(0..valid.len())]);
        masks.push(Arc::from(m));
    }
    (masks, chosen)
}

/// Central finite-difference gradient of `loss` at the network's parameters.
pub fn numeric_grad<F: Fn(&Mlp) -> f64>(net: &Mlp, loss: F) -> Vec<f64> {
    let h = 1e-6;
    let base = net.params().to_vec();
    let mut probe = net.clone();
    let mut out = Vec::with_capacity(base.len());
    for i in 0..base.len() {
        let mut p = base.clone();
        p[i] = base[i] + h;
        probe.set_params(&p);
        let up = loss(&probe);
        p[i] = base[i] - h;
        probe.set_params(&p);
        let down = loss(&probe);
        out.push((up - down) / (2.0 * h));
    }
    out
}

/// `||a - b|| / max(||a||, ||b||)`.
pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    diff / na.max(nb).max(1e-12)
}
