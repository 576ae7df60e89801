//! Masked categorical distributions. Invalid actions get probability exactly zero and
//! are never returned by argmax or sampling.

use rand::Rng;

use crate::error::{Result, RlError};

fn check(values: &[f64], mask: &[bool]) -> Result<()> {
    if values.len() != mask.len() {
        return Err(RlError::Shape(format!(
            "{} values for a mask of {}",
            values.len(),
            mask.len()
        )));
    }
    if !mask.iter().any(|&m| m) {
        return Err(RlError::EmptyMask);
    }
    Ok(())
}

/// Argmax over valid entries; ties go to the lowest index.
pub fn masked_greedy(values: &[f64], mask: &[bool]) -> Result<usize> {
    check(values, mask)?;
    let mut best: Option<(usize, f64)> = None;
    for (a, (&v, &ok)) in values.iter().zip(mask).enumerate() {
        if ok && best.is_none_or(|(_, b)| v > b) {
            best = Some((a, v));
        }
    }
    Ok(best.expect("mask has a valid entry").0)
}

/// Log-probabilities of the softmax restricted to valid entries; invalid entries are
/// `-inf`.
pub fn masked_log_softmax(logits: &[f64], mask: &[bool]) -> Result<Vec<f64>> {
    check(logits, mask)?;
    let max = logits
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|(&l, _)| l)
        .fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logits
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|(&l, _)| (l - max).exp())
        .sum();
    let log_z = max + sum.ln();
    Ok(logits
        .iter()
        .zip(mask)
        .map(|(&l, &m)| if m { l - log_z } else { f64::NEG_INFINITY })
        .collect())
}

pub fn masked_softmax(logits: &[f64], mask: &[bool]) -> Result<Vec<f64>> {
    Ok(masked_log_softmax(logits, mask)?
        .into_iter()
        .map(f64::exp)
        .collect())
}

/// Entropy of a distribution given its log-probabilities (`-inf` entries contribute 0).
pub fn entropy(log_probs: &[f64]) -> f64 {
    -log_probs
        .iter()
        .filter(|l| l.is_finite())
        .map(|&l| l.exp() * l)
        .sum::<f64>()
}

/// Samples from the masked softmax. Returns the action and its log-probability.
pub fn masked_sample<R: Rng + ?Sized>(logits: &[f64], mask: &[bool], rng: &mut R) -> Result<(usize, f64)> {
    let log_probs = masked_log_softmax(logits, mask)?;
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last_valid = 0;
    for (a, &lp) in log_probs.iter().enumerate() {
        if lp.is_finite() {
            acc += lp.exp();
            last_valid = a;
            if u < acc {
                return Ok((a, lp));
            }
        }
    }
    Ok((last_valid, log_probs[last_valid]))
}

/// Uniform choice among valid entries.
pub fn uniform_valid<R: Rng + ?Sized>(mask: &[bool], rng: &mut R) -> Result<usize> {
    let valid: Vec<usize> = (0..mask.len()).filter(|&a| mask[a]).collect();
    if valid.is_empty() {
        return Err(RlError::EmptyMask);
    }
    Ok(valid[rng.random_range(0..valid.len())])
}
