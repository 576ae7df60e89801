//! Independent references for the harness tests.
#![allow(dead_code)]

use std::f64::consts::FRAC_PI_2;
use std::fs;
use std::path::Path;

/// Welford's streaming mean and sample standard deviation.
pub fn streaming_moments(xs: &[f64]) -> (f64, f64) {
    let mut n = 0.0;
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for &x in xs {
        n += 1.0;
        let d = x - mean;
        mean += d / n;
        m2 += d * (x - mean);
    }
    let std = if n > 1.0 { (m2 / (n - 1.0)).sqrt() } else { 0.0 };
    (mean, std)
}

/// Composite Simpson rule with `n` (even) intervals.
fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + i as f64 * h);
    }
    sum * h / 3.0
}

/// `P(|T| >= |t|)` for Student's t with real `nu`, from the angular form of the density:
/// with `t = sqrt(nu) tan(x)` the density is proportional to `cos(x)^(nu - 1)`. The
/// tail is integrated in `s = pi/2 - x`, and `s = w^4` removes the endpoint singularity.
pub fn quadrature_two_sided_p(t: f64, nu: f64) -> f64 {
    let theta = (t.abs() / nu.sqrt()).atan();
    let g = |w: f64| {
        let s = w.powi(4);
        s.sin().powf(nu - 1.0) * 4.0 * w.powi(3)
    };
    let n = 200_000;
    let tail = simpson(g, 0.0, (FRAC_PI_2 - theta).powf(0.25), n);
    let whole = simpson(g, 0.0, FRAC_PI_2.powf(0.25), n);
    tail / whole
}

/// Welch statistic, Welch-Satterthwaite degrees of freedom and quadrature p-value.
pub fn reference_welch(a: &[f64], b: &[f64]) -> (f64, f64, f64) {
    let (ma, sa) = streaming_moments(a);
    let (mb, sb) = streaming_moments(b);
    let va = sa * sa / a.len() as f64;
    let vb = sb * sb / b.len() as f64;
    let t = (ma - mb) / (va + vb).sqrt();
    let dof = (va + vb).powi(2)
        / (va * va / (a.len() - 1) as f64 + vb * vb / (b.len() - 1) as f64);
    (t, dof, quadrature_two_sided_p(t, dof))
}

/// Writes a `curves.csv` with one final point per run for every (scenario, algo) group.
pub fn write_synthetic_curves(dir: &Path, variant: &str, groups: &[(&str, &str, Vec<f64>)]) {
    fs::create_dir_all(dir).unwrap();
    let mut text = String::from(
        "run_id,scenario,algo,variant,seed,timestep,eval_mean_shifters,eval_mean_optime\n",
    );
    for (scenario, algo, finals) in groups {
        for (i, v) in finals.iter().enumerate() {
            let id = format!("s{scenario}-{variant}-{algo}-{i}");
            // An early point that must be ignored, then the final one.
            text.push_str(&format!("{id},{scenario},{algo},{variant},{i},0,99,9999\n"));
            text.push_str(&format!(
                "{id},{scenario},{algo},{variant},{i},100,{v},{}\n",
                1000.0 + 50.0 * v
            ));
        }
    }
    fs::write(dir.join("curves.csv"), text).unwrap();
}
