mod support;

use std::collections::BTreeMap;
use std::fs;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stowage_bench::output::{
    aggregate, bands, emit_outputs, fmt_num, read_curves, write_plotdata, CurveRow,
};
use stowage_bench::runner::{load_runs, run_experiment};
use stowage_bench::{ExperimentConfig, ScenarioRef};
use stowage_rl::Algo;
use support::streaming_moments;

fn random_curves(seed: u64) -> Vec<CurveRow> {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    for algo in ["dqn", "ppo", "trpo"] {
        for run in 0..r.random_range(1..5) {
            for t in (0..=500).step_by(100) {
                let sh = r.random_range(0.0..40.0);
                rows.push(CurveRow {
                    run_id: format!("s1-spge-{algo}-{run}"),
                    scenario: "1".into(),
                    algo: algo.into(),
                    variant: "spge".into(),
                    seed: run,
                    timestep: t,
                    eval_mean_shifters: sh,
                    eval_mean_optime: 45.0 * 60.0 + 50.0 * sh,
                });
            }
        }
    }
    rows
}

#[test]
fn bands_equal_independent_recomputation() {
    for seed in 0..20 {
        let rows = random_curves(seed);
        let mut raw: BTreeMap<(String, usize), Vec<&CurveRow>> = BTreeMap::new();
        for r in &rows {
            raw.entry((r.algo.clone(), r.timestep)).or_default().push(r);
        }
        let figures = bands(&rows);
        assert_eq!(figures.len(), 1);
        let band = figures.values().next().unwrap();
        assert_eq!(band.len(), raw.len());
        for b in band {
            let pts = &raw[&(b.algo.clone(), b.timestep)];
            let sh: Vec<f64> = pts.iter().map(|p| p.eval_mean_shifters).collect();
            let ot: Vec<f64> = pts.iter().map(|p| p.eval_mean_optime).collect();
            let (ms, ss) = streaming_moments(&sh);
            let (mo, so) = streaming_moments(&ot);
            assert_eq!(b.runs, pts.len());
            assert!((b.mean_shifters - ms).abs() < 1e-9);
            assert!((b.std_shifters - ss).abs() < 1e-9);
            assert!((b.mean_optime - mo).abs() < 1e-9);
            assert!((b.std_optime - so).abs() < 1e-9);
        }
    }
}

#[test]
fn plot_files_hold_the_band_values() {
    let rows = random_curves(3);
    let dir = tempfile::tempdir().unwrap();
    let names = write_plotdata(&rows, dir.path()).unwrap();
    assert_eq!(names, ["scenario1_spge.csv"]);
    let text = fs::read_to_string(dir.path().join(&names[0])).unwrap();
    let band = bands(&rows).into_values().next().unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "algo,timestep,runs,mean_shifters,std_shifters,mean_optime,std_optime"
    );
    for (line, b) in lines.zip(&band) {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells[0], b.algo);
        assert_eq!(cells[3].parse::<f64>().unwrap(), b.mean_shifters);
        assert_eq!(cells[4].parse::<f64>().unwrap(), b.std_shifters);
    }
}

#[test]
fn aggregate_matches_streaming_moments_of_finals() {
    let rows = random_curves(9);
    for f in aggregate(&rows) {
        let finals: Vec<f64> = rows
            .iter()
            .filter(|r| r.algo == f.algo && r.timestep == 500)
            .map(|r| r.eval_mean_shifters)
            .collect();
        let (m, s) = streaming_moments(&finals);
        assert_eq!(f.runs, finals.len());
        assert!((f.mean_shifters - m).abs() < 1e-9);
        assert!((f.std_shifters - s).abs() < 1e-9);
    }
}

#[test]
fn empty_input_writes_headers_only() {
    let dir = tempfile::tempdir().unwrap();
    emit_outputs(&[], dir.path()).unwrap();
    let curves = fs::read_to_string(dir.path().join("curves.csv")).unwrap();
    let finals = fs::read_to_string(dir.path().join("finals.csv")).unwrap();
    assert_eq!(curves.lines().count(), 1);
    assert_eq!(finals.lines().count(), 1);
    assert!(fs::read_dir(dir.path().join("plotdata")).unwrap().next().is_none());
}

fn tiny(out: &std::path::Path, reps: usize, timesteps: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(ScenarioRef::Id(1), Algo::A2c);
    cfg.repetitions = Some(reps);
    cfg.total_timesteps = timesteps;
    cfg.eval_every = Some(100);
    cfg.eval_episodes = 2;
    cfg.out_dir = out.to_path_buf();
    cfg
}

#[test]
fn finals_agree_with_curves_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny(dir.path(), 3, 250);
    let entries = run_experiment(&cfg, 1).unwrap();
    assert_eq!(entries.len(), 3);
    emit_outputs(&load_runs(dir.path()).unwrap(), dir.path()).unwrap();
    let curves = read_curves(&dir.path().join("curves.csv")).unwrap();
    // 0, 100, 200 and the off-grid final point at 250.
    assert_eq!(curves.len(), 3 * 4);
    let mut last: BTreeMap<&str, &CurveRow> = BTreeMap::new();
    for c in &curves {
        last.insert(&c.run_id, c);
    }
    let finals: Vec<f64> = last.values().map(|c| c.eval_mean_optime).collect();
    let expected = finals.iter().sum::<f64>() / finals.len() as f64;
    let text = fs::read_to_string(dir.path().join("finals.csv")).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[..4], ["1", "a2c", "spge", "3"]);
    assert!((row[6].parse::<f64>().unwrap() - expected).abs() < 1e-9 * expected);
    assert_eq!(fmt_num(expected).parse::<f64>().unwrap(), expected);
}

#[test]
fn zero_budget_records_only_the_untrained_evaluation() {
    let dir = tempfile::tempdir().unwrap();
    let entries = run_experiment(&tiny(dir.path(), 1, 0), 1).unwrap();
    assert_eq!(entries.len(), 1);
    let samples = &entries[0].record.samples;
    assert_eq!(samples.len(), 1);
    assert_eq!(samples[0].timestep, 0);
}

#[test]
fn stored_runs_are_reused_and_settings_changes_retrain() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny(dir.path(), 2, 150);
    let first = run_experiment(&cfg, 1).unwrap();
    let path = dir.path().join("runs").join(format!("{}.json", first[0].run_id));
    // Tamper with a stored curve: a matching rerun must return it unchanged.
    let mut tampered = first[0].clone();
    tampered.record.samples[0].mean_shifters = -1.0;
    fs::write(&path, serde_json::to_string(&tampered).unwrap()).unwrap();
    let again = run_experiment(&cfg, 1).unwrap();
    assert_eq!(again[0].record.samples[0].mean_shifters, -1.0);
    assert_eq!(again[1], first[1]);
    // A different budget invalidates the stored run.
    let longer = tiny(dir.path(), 2, 200);
    let retrained = run_experiment(&longer, 1).unwrap();
    assert_ne!(retrained[0].record.samples[0].mean_shifters, -1.0);
}

#[test]
fn rejected_config_runs_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny(dir.path(), 1, 100);
    cfg.env = Some(stowage_core::EnvKind::Spaec);
    assert!(run_experiment(&cfg, 1).is_err());
    assert!(!dir.path().join("runs").exists());
}
