//! Sample moments and Welch's unequal-variance t-test.

use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::error::{BenchError, Result};

pub const SIGNIFICANCE_LEVEL: f64 = 0.05;

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation with the `n - 1` divisor; 0 for fewer than two values.
pub fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m).powi(2)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchResult {
    pub t: f64,
    pub dof: f64,
    pub p_two_sided: f64,
}

impl WelchResult {
    pub fn significant(&self) -> bool {
        self.p_two_sided < SIGNIFICANCE_LEVEL
    }
}

/// Two-sided Student-t tail probability `P(|T| >= |t|)` with `dof` degrees of freedom.
pub fn student_t_two_sided(t: f64, dof: f64) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    if t.is_infinite() {
        return 0.0;
    }
    beta_reg(dof / 2.0, 0.5, dof / (dof + t * t))
}

/// Welch's t statistic for `mean(a) - mean(b)`, Welch-Satterthwaite degrees of freedom
/// and the two-sided p-value.
///
/// When both samples have zero variance the statistic is 0 (equal means, p = 1) or
/// infinite (p = 0), and the degrees of freedom fall back to `n_a + n_b - 2`.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<WelchResult> {
    if a.len() < 2 || b.len() < 2 {
        return Err(BenchError::Stats(format!(
            "t-test needs at least two values per sample, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let diff = mean(a) - mean(b);
    let va = sample_std(a).powi(2) / na;
    let vb = sample_std(b).powi(2) / nb;
    let se2 = va + vb;
    if se2 == 0.0 {
        let t = if diff == 0.0 { 0.0 } else { diff.signum() * f64::INFINITY };
        return Ok(WelchResult {
            t,
            dof: na + nb - 2.0,
            p_two_sided: student_t_two_sided(t, na + nb - 2.0),
        });
    }
    let t = diff / se2.sqrt();
    let dof = se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
    Ok(WelchResult {
        t,
        dof,
        p_two_sided: student_t_two_sided(t, dof),
    })
}
