//! Side-by-side comparison of two output directories, typically SPGE-MC against SPAEC.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};
use crate::output::{fmt_num, read_curves, run_finals, CurveRow, CURVES_FILE};
use crate::stats::{mean, sample_std, welch_t_test, WelchResult};

/// Lower is better for both indicators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kpi {
    Shifters,
    Optime,
}

impl Kpi {
    pub const ALL: [Kpi; 2] = [Kpi::Shifters, Kpi::Optime];

    pub fn name(self) -> &'static str {
        match self {
            Kpi::Shifters => "shifters",
            Kpi::Optime => "optime",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub scenario: String,
    pub algo: String,
    pub kpi: Kpi,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// Absent when either side has fewer than two runs.
    pub test: Option<WelchResult>,
}

impl ComparisonRow {
    pub fn a_mean(&self) -> f64 {
        mean(&self.a)
    }

    pub fn b_mean(&self) -> f64 {
        mean(&self.b)
    }

    pub fn a_std(&self) -> f64 {
        sample_std(&self.a)
    }

    pub fn b_std(&self) -> f64 {
        sample_std(&self.b)
    }

    pub fn diff(&self) -> f64 {
        self.a_mean() - self.b_mean()
    }

    pub fn significant(&self) -> bool {
        self.test.is_some_and(|t| t.significant())
    }

    /// Which side wins a significant difference.
    pub fn marker(&self) -> &'static str {
        match (self.significant(), self.diff() < 0.0) {
            (false, _) => "",
            (true, true) => "mc_better",
            (true, false) => "spaec_better",
        }
    }
}

/// Mean and std in the "value (std)" layout.
pub fn value_std(m: f64, s: f64) -> String {
    format!("{m:.2} ({s:.2})")
}

type Finals = BTreeMap<(u64, String, usize, String), (String, Vec<f64>, Vec<f64>)>;

fn finals_by_group(rows: &[CurveRow], source: &Path) -> Result<Finals> {
    let mut out: Finals = BTreeMap::new();
    for f in run_finals(rows) {
        let sid = f.scenario.parse::<u64>().unwrap_or(u64::MAX);
        let aid = f
            .algo
            .parse::<stowage_rl::Algo>()
            .ok()
            .and_then(|a| stowage_rl::Algo::ALL.iter().position(|x| *x == a))
            .unwrap_or(usize::MAX);
        let g = out
            .entry((sid, f.scenario.clone(), aid, f.algo.clone()))
            .or_insert_with(|| (f.variant.clone(), Vec::new(), Vec::new()));
        if g.0 != f.variant {
            return Err(BenchError::Input {
                path: source.display().to_string(),
                reason: format!(
                    "scenario {} / {} mixes variants {} and {}",
                    f.scenario, f.algo, g.0, f.variant
                ),
            });
        }
        g.1.push(f.shifters);
        g.2.push(f.optime);
    }
    Ok(out)
}

/// Pairs runs from two curve sets by (scenario, algorithm); groups present on only one
/// side are skipped.
pub fn compare_rows(a: &[CurveRow], b: &[CurveRow]) -> Result<Vec<ComparisonRow>> {
    compare_inner(a, Path::new("a"), b, Path::new("b"))
}

fn compare_inner(a: &[CurveRow], pa: &Path, b: &[CurveRow], pb: &Path) -> Result<Vec<ComparisonRow>> {
    let fa = finals_by_group(a, pa)?;
    let fb = finals_by_group(b, pb)?;
    let mut rows = Vec::new();
    for (key, (_, a_sh, a_ot)) in &fa {
        let Some((_, b_sh, b_ot)) = fb.get(key) else {
            continue;
        };
        for kpi in Kpi::ALL {
            let (xa, xb) = match kpi {
                Kpi::Shifters => (a_sh, b_sh),
                Kpi::Optime => (a_ot, b_ot),
            };
            let test = if xa.len() >= 2 && xb.len() >= 2 {
                Some(welch_t_test(xa, xb)?)
            } else {
                None
            };
            rows.push(ComparisonRow {
                scenario: key.1.clone(),
                algo: key.3.clone(),
                kpi,
                a: xa.clone(),
                b: xb.clone(),
                test,
            });
        }
    }
    Ok(rows)
}

/// Compares the `curves.csv` files of two output directories.
pub fn compare_variants(dir_mc: &Path, dir_spaec: &Path) -> Result<Vec<ComparisonRow>> {
    let pa = dir_mc.join(CURVES_FILE);
    let pb = dir_spaec.join(CURVES_FILE);
    compare_inner(&read_curves(&pa)?, &pa, &read_curves(&pb)?, &pb)
}

const HEADER: [&str; 17] = [
    "scenario",
    "algo",
    "kpi",
    "mc_runs",
    "mc_mean",
    "mc_std",
    "spaec_runs",
    "spaec_mean",
    "spaec_std",
    "mc",
    "spaec",
    "diff",
    "t",
    "dof",
    "p",
    "significant",
    "marker",
];

pub fn write_comparison(rows: &[ComparisonRow], path: &Path) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(HEADER)?;
    let opt = |v: Option<f64>| v.map(fmt_num).unwrap_or_default();
    for r in rows {
        w.write_record([
            r.scenario.clone(),
            r.algo.clone(),
            r.kpi.name().to_string(),
            r.a.len().to_string(),
            fmt_num(r.a_mean()),
            fmt_num(r.a_std()),
            r.b.len().to_string(),
            fmt_num(r.b_mean()),
            fmt_num(r.b_std()),
            value_std(r.a_mean(), r.a_std()),
            value_std(r.b_mean(), r.b_std()),
            fmt_num(r.diff()),
            opt(r.test.map(|t| t.t)),
            opt(r.test.map(|t| t.dof)),
            opt(r.test.map(|t| t.p_two_sided)),
            r.significant().to_string(),
            r.marker().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Fixed-width table for the terminal; significant differences are highlighted
/// when `color` is set.
pub fn render_table(rows: &[ComparisonRow], color: bool) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<8} {:<6} {:<9} {:>20} {:>20} {:>10} {:>8}",
        "scenario", "algo", "kpi", "spge-mc", "spaec", "diff", "p"
    );
    for r in rows {
        let p = r
            .test
            .map(|t| format!("{:.4}", t.p_two_sided))
            .unwrap_or_else(|| "-".into());
        let diff = format!("{:.2}{}", r.diff(), if r.significant() { "*" } else { "" });
        let diff = match (color, r.marker()) {
            (true, "mc_better") => format!("\x1b[32m{diff:>10}\x1b[0m"),
            (true, "spaec_better") => format!("\x1b[31m{diff:>10}\x1b[0m"),
            _ => format!("{diff:>10}"),
        };
        let _ = writeln!(
            s,
            "{:<8} {:<6} {:<9} {:>20} {:>20} {} {:>8}",
            r.scenario,
            r.algo,
            r.kpi.name(),
            value_std(r.a_mean(), r.a_std()),
            value_std(r.b_mean(), r.b_std()),
            diff,
            p
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curves(variant: &str, algo: &str, finals: &[f64]) -> Vec<CurveRow> {
        finals
            .iter()
            .enumerate()
            .map(|(i, &sh)| CurveRow {
                run_id: format!("{variant}-{algo}-{i}"),
                scenario: "6".into(),
                algo: algo.into(),
                variant: variant.into(),
                seed: i as u64,
                timestep: 100,
                eval_mean_shifters: sh,
                eval_mean_optime: 1000.0 + 50.0 * sh,
            })
            .collect()
    }

    #[test]
    fn identical_inputs_show_no_difference() {
        let a = curves("spge-mc", "ppo", &[3.0, 4.0, 5.0]);
        let rows = compare_rows(&a, &a).unwrap();
        assert_eq!(rows.len(), 2);
        for r in rows {
            assert_eq!(r.diff(), 0.0);
            assert!(!r.significant());
            assert_eq!(r.marker(), "");
        }
    }

    #[test]
    fn shifted_sample_is_flagged_for_the_lower_side() {
        let a = curves("spge-mc", "dqn", &[3.0, 3.01, 2.99, 3.0]);
        let b = curves("spaec", "dqn", &[5.0, 5.01, 4.99, 5.0]);
        let rows = compare_rows(&a, &b).unwrap();
        for r in &rows {
            assert!(r.significant());
            assert!(r.diff() < 0.0);
            assert_eq!(r.marker(), "mc_better");
        }
    }

    #[test]
    fn single_run_groups_have_no_test() {
        let a = curves("spge-mc", "a2c", &[1.0]);
        let rows = compare_rows(&a, &a).unwrap();
        assert!(rows.iter().all(|r| r.test.is_none() && !r.significant()));
    }

    #[test]
    fn mixed_variants_are_rejected() {
        let mut a = curves("spge-mc", "a2c", &[1.0, 2.0]);
        a.extend(curves("spaec", "a2c", &[1.0, 2.0]));
        assert!(compare_rows(&a, &a).is_err());
    }

    #[test]
    fn value_std_layout() {
        assert_eq!(value_std(6283.7, 61.26), "6283.70 (61.26)");
    }
}
