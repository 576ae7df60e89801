//! Repeated training runs with per-run persistence.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use stowage_core::EnvKind;
use stowage_rl::{train, Algo, RunRecord, TaskSpec};

use crate::config::ExperimentConfig;
use crate::error::{BenchError, Result};

/// Environment variable holding the number of concurrent runs.
pub const WORKERS_ENV: &str = "STOWAGE_WORKERS";

pub const RUNS_DIR: &str = "runs";

/// One finished repetition as stored under `runs/`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEntry {
    pub run_id: String,
    pub scenario: String,
    pub variant: EnvKind,
    pub algo: Algo,
    pub seed: u64,
    pub task: TaskSpec,
    pub record: RunRecord,
}

pub fn run_id(scenario: &str, variant: EnvKind, algo: Algo, seed: u64) -> String {
    format!("s{scenario}-{}-{algo}-{seed}", variant.name())
}

/// Worker count from [`WORKERS_ENV`], else the available parallelism.
pub fn worker_count() -> Result<usize> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(BenchError::Config(format!(
                "{WORKERS_ENV} must be a positive integer, got '{v}'"
            ))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn entry_path(out_dir: &Path, run_id: &str) -> PathBuf {
    out_dir.join(RUNS_DIR).join(format!("{run_id}.json"))
}

/// A stored run is reused only if it was produced by the same task and settings.
fn load_matching(path: &Path, task: &TaskSpec, cfg: &ExperimentConfig) -> Option<RunEntry> {
    let text = fs::read_to_string(path).ok()?;
    let entry: RunEntry = serde_json::from_str(&text).ok()?;
    let same = entry.task == *task
        && entry.record.config == cfg.algo_config
        && entry.record.settings == cfg.settings()
        && entry.algo == cfg.algo;
    same.then_some(entry)
}

/// Runs every repetition (seed `base_seed + i`), writing each to `runs/<run_id>.json`
/// as soon as it finishes. Runs already on disk with matching settings are skipped.
pub fn run_experiment(cfg: &ExperimentConfig, workers: usize) -> Result<Vec<RunEntry>> {
    cfg.validate()?;
    let task = cfg.task()?;
    let label = cfg.scenario.label();
    let variant = cfg.variant();
    fs::create_dir_all(cfg.out_dir.join(RUNS_DIR))?;
    let seeds: Vec<u64> = (0..cfg.repetitions() as u64)
        .map(|i| cfg.base_seed.wrapping_add(i))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| BenchError::Config(format!("worker pool: {e}")))?;
    pool.install(|| {
        seeds
            .par_iter()
            .map(|&seed| {
                let id = run_id(&label, variant, cfg.algo, seed);
                let path = entry_path(&cfg.out_dir, &id);
                if let Some(entry) = load_matching(&path, &task, cfg) {
                    return Ok(entry);
                }
                let record = train(&task, cfg.algo, &cfg.algo_config, cfg.settings(), seed)?;
                let entry = RunEntry {
                    run_id: id,
                    scenario: label.clone(),
                    variant,
                    algo: cfg.algo,
                    seed,
                    task: task.clone(),
                    record,
                };
                let tmp = path.with_extension("json.tmp");
                fs::write(&tmp, serde_json::to_string_pretty(&entry)?)?;
                fs::rename(&tmp, &path)?;
                Ok(entry)
            })
            .collect()
    })
}

/// Every stored run under `out_dir/runs`, in a stable order.
pub fn load_runs(out_dir: &Path) -> Result<Vec<RunEntry>> {
    let dir = out_dir.join(RUNS_DIR);
    let mut entries = Vec::new();
    if !dir.is_dir() {
        return Ok(entries);
    }
    for item in fs::read_dir(&dir)? {
        let path = item?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("json") {
            continue;
        }
        let text = fs::read_to_string(&path)?;
        let entry: RunEntry = serde_json::from_str(&text).map_err(|e| BenchError::Input {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        entries.push(entry);
    }
    sort_entries(&mut entries);
    Ok(entries)
}

pub fn sort_entries(entries: &mut [RunEntry]) {
    entries.sort_by(|a, b| {
        (&a.scenario, a.variant.name(), a.algo.name(), a.seed).cmp(&(
            &b.scenario,
            b.variant.name(),
            b.algo.name(),
            b.seed,
        ))
    });
}

/// Writes each run's final greedy trace to `traces/<run_id>.jsonl`.
pub fn write_traces(entries: &[RunEntry], out_dir: &Path) -> Result<usize> {
    let dir = out_dir.join("traces");
    let mut written = 0;
    for e in entries.iter().filter(|e| !e.record.final_trace.is_empty()) {
        fs::create_dir_all(&dir)?;
        let mut text = String::new();
        for rec in &e.record.final_trace {
            text.push_str(&serde_json::to_string(rec)?);
            text.push('\n');
        }
        fs::write(dir.join(format!("{}.jsonl", e.run_id)), text)?;
        written += 1;
    }
    Ok(written)
}
