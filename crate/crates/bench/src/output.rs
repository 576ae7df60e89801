//! CSV emission: raw learning curves, final-KPI table and plot-ready bands.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use stowage_rl::Algo;

use crate::error::{BenchError, Result};
use crate::runner::RunEntry;
use crate::stats::{mean, sample_std};

pub const CURVES_FILE: &str = "curves.csv";
pub const FINALS_FILE: &str = "finals.csv";
pub const PLOTDATA_DIR: &str = "plotdata";

const CURVE_HEADER: [&str; 8] = [
    "run_id",
    "scenario",
    "algo",
    "variant",
    "seed",
    "timestep",
    "eval_mean_shifters",
    "eval_mean_optime",
];
const FINAL_HEADER: [&str; 8] = [
    "scenario",
    "algo",
    "variant",
    "runs",
    "mean_shifters",
    "std_shifters",
    "mean_optime",
    "std_optime",
];
const BAND_HEADER: [&str; 7] = [
    "algo",
    "timestep",
    "runs",
    "mean_shifters",
    "std_shifters",
    "mean_optime",
    "std_optime",
];

/// One evaluation point of one run; a row of `curves.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub run_id: String,
    pub scenario: String,
    pub algo: String,
    pub variant: String,
    pub seed: u64,
    pub timestep: usize,
    pub eval_mean_shifters: f64,
    pub eval_mean_optime: f64,
}

/// Mean and sample std of the final KPIs for one (scenario, algorithm, variant).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalRow {
    pub scenario: String,
    pub algo: String,
    pub variant: String,
    pub runs: usize,
    pub mean_shifters: f64,
    pub std_shifters: f64,
    pub mean_optime: f64,
    pub std_optime: f64,
}

/// Cross-run statistics at one timestep of one algorithm's curve.
#[derive(Debug, Clone, PartialEq)]
pub struct BandRow {
    pub algo: String,
    pub timestep: usize,
    pub runs: usize,
    pub mean_shifters: f64,
    pub std_shifters: f64,
    pub mean_optime: f64,
    pub std_optime: f64,
}

/// Final KPIs of a single run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunFinal {
    pub run_id: String,
    pub scenario: String,
    pub algo: String,
    pub variant: String,
    pub shifters: f64,
    pub optime: f64,
}

/// Rust's `Display` for `f64` is the shortest string that parses back to the same value.
pub fn fmt_num(x: f64) -> String {
    format!("{x}")
}

/// Orders scenario labels numerically when possible and algorithms in registry order.
fn group_key(scenario: &str, variant: &str, algo: &str) -> (u64, String, String, usize, String) {
    let sid = scenario.parse::<u64>().unwrap_or(u64::MAX);
    let aid = algo
        .parse::<Algo>()
        .ok()
        .and_then(|a| Algo::ALL.iter().position(|x| *x == a))
        .unwrap_or(usize::MAX);
    (sid, scenario.to_string(), variant.to_string(), aid, algo.to_string())
}

pub fn curve_rows(entries: &[RunEntry]) -> Vec<CurveRow> {
    let mut rows: Vec<CurveRow> = entries
        .iter()
        .flat_map(|e| {
            e.record.samples.iter().map(move |s| CurveRow {
                run_id: e.run_id.clone(),
                scenario: e.scenario.clone(),
                algo: e.algo.name().to_string(),
                variant: e.variant.name().to_string(),
                seed: e.seed,
                timestep: s.timestep,
                eval_mean_shifters: s.mean_shifters,
                eval_mean_optime: s.mean_optime,
            })
        })
        .collect();
    sort_curves(&mut rows);
    rows
}

fn sort_curves(rows: &mut [CurveRow]) {
    rows.sort_by(|a, b| {
        (group_key(&a.scenario, &a.variant, &a.algo), a.seed, &a.run_id, a.timestep).cmp(&(
            group_key(&b.scenario, &b.variant, &b.algo),
            b.seed,
            &b.run_id,
            b.timestep,
        ))
    });
}

/// The last evaluation point of every run, in curve order.
pub fn run_finals(rows: &[CurveRow]) -> Vec<RunFinal> {
    let mut last: BTreeMap<&str, &CurveRow> = BTreeMap::new();
    let mut order = Vec::new();
    for r in rows {
        match last.get(r.run_id.as_str()) {
            Some(prev) if prev.timestep >= r.timestep => {}
            Some(_) => {
                last.insert(&r.run_id, r);
            }
            None => {
                order.push(r.run_id.as_str());
                last.insert(&r.run_id, r);
            }
        }
    }
    order
        .into_iter()
        .map(|id| {
            let r = last[id];
            RunFinal {
                run_id: r.run_id.clone(),
                scenario: r.scenario.clone(),
                algo: r.algo.clone(),
                variant: r.variant.clone(),
                shifters: r.eval_mean_shifters,
                optime: r.eval_mean_optime,
            }
        })
        .collect()
}

/// Final-KPI table: one row per (scenario, algorithm, variant).
pub fn aggregate(rows: &[CurveRow]) -> Vec<FinalRow> {
    let mut groups: BTreeMap<_, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for f in run_finals(rows) {
        let g = groups
            .entry(group_key(&f.scenario, &f.variant, &f.algo))
            .or_default();
        g.0.push(f.shifters);
        g.1.push(f.optime);
    }
    groups
        .into_iter()
        .map(|((_, scenario, variant, _, algo), (sh, ot))| FinalRow {
            scenario,
            algo,
            variant,
            runs: sh.len(),
            mean_shifters: mean(&sh),
            std_shifters: sample_std(&sh),
            mean_optime: mean(&ot),
            std_optime: sample_std(&ot),
        })
        .collect()
}

/// Mean and std bands per (scenario, variant) figure, keyed by the plot file stem.
pub fn bands(rows: &[CurveRow]) -> BTreeMap<(u64, String, String), Vec<BandRow>> {
    type Points = BTreeMap<usize, (Vec<f64>, Vec<f64>)>;
    type Figure = BTreeMap<(usize, String), Points>;
    let mut figures: BTreeMap<(u64, String, String), Figure> = BTreeMap::new();
    for r in rows {
        let (sid, scenario, variant, aid, algo) = group_key(&r.scenario, &r.variant, &r.algo);
        let point = figures
            .entry((sid, scenario, variant))
            .or_default()
            .entry((aid, algo))
            .or_default()
            .entry(r.timestep)
            .or_default();
        point.0.push(r.eval_mean_shifters);
        point.1.push(r.eval_mean_optime);
    }
    figures
        .into_iter()
        .map(|(fig, algos)| {
            let rows = algos
                .into_iter()
                .flat_map(|((_, algo), points)| {
                    points.into_iter().map(move |(timestep, (sh, ot))| BandRow {
                        algo: algo.clone(),
                        timestep,
                        runs: sh.len(),
                        mean_shifters: mean(&sh),
                        std_shifters: sample_std(&sh),
                        mean_optime: mean(&ot),
                        std_optime: sample_std(&ot),
                    })
                })
                .collect();
            (fig, rows)
        })
        .collect()
}

pub fn plot_file_name(scenario: &str, variant: &str) -> String {
    format!("scenario{scenario}_{variant}.csv")
}

pub fn write_curves(rows: &[CurveRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(CURVE_HEADER)?;
    for r in rows {
        w.write_record([
            r.run_id.clone(),
            r.scenario.clone(),
            r.algo.clone(),
            r.variant.clone(),
            r.seed.to_string(),
            r.timestep.to_string(),
            fmt_num(r.eval_mean_shifters),
            fmt_num(r.eval_mean_optime),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_finals(rows: &[FinalRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(FINAL_HEADER)?;
    for r in rows {
        w.write_record([
            r.scenario.clone(),
            r.algo.clone(),
            r.variant.clone(),
            r.runs.to_string(),
            fmt_num(r.mean_shifters),
            fmt_num(r.std_shifters),
            fmt_num(r.mean_optime),
            fmt_num(r.std_optime),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes one band file per figure and returns the file names in order.
pub fn write_plotdata(rows: &[CurveRow], dir: &Path) -> Result<Vec<String>> {
    fs::create_dir_all(dir)?;
    let mut names = Vec::new();
    for ((_, scenario, variant), band) in bands(rows) {
        let name = plot_file_name(&scenario, &variant);
        let mut w = csv::Writer::from_path(dir.join(&name))?;
        w.write_record(BAND_HEADER)?;
        for b in band {
            w.write_record([
                b.algo,
                b.timestep.to_string(),
                b.runs.to_string(),
                fmt_num(b.mean_shifters),
                fmt_num(b.std_shifters),
                fmt_num(b.mean_optime),
                fmt_num(b.std_optime),
            ])?;
        }
        w.flush()?;
        names.push(name);
    }
    Ok(names)
}

/// Writes `curves.csv`, `finals.csv` and `plotdata/` for the given runs.
pub fn emit_outputs(entries: &[RunEntry], out_dir: &Path) -> Result<()> {
    fs::create_dir_all(out_dir)?;
    let rows = curve_rows(entries);
    write_curves(&rows, &out_dir.join(CURVES_FILE))?;
    write_finals(&aggregate(&rows), &out_dir.join(FINALS_FILE))?;
    write_plotdata(&rows, &out_dir.join(PLOTDATA_DIR))?;
    Ok(())
}

pub fn read_curves(path: &Path) -> Result<Vec<CurveRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| BenchError::Input {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    let headers = r.headers()?.clone();
    if headers.iter().ne(CURVE_HEADER) {
        return Err(BenchError::Input {
            path: path.display().to_string(),
            reason: format!("expected columns {}", CURVE_HEADER.join(",")),
        });
    }
    let mut rows = Vec::new();
    for rec in r.deserialize() {
        rows.push(rec.map_err(|e: csv::Error| BenchError::Input {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?);
    }
    Ok(rows)
}

/// Rebuilds `plotdata/` in `out` from the `curves.csv` in `input`.
pub fn plotdata_from_dir(input: &Path, out: &Path) -> Result<Vec<String>> {
    let rows = read_curves(&input.join(CURVES_FILE))?;
    write_plotdata(&rows, out)
}
