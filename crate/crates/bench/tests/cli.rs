mod support;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use stowage_core::{generate_instance, GridSpec, ScenarioSpec};
use support::write_synthetic_curves;

fn bench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stowage-bench"))
        .args(args)
        .env("STOWAGE_WORKERS", "1")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn unknown_scenario_names_the_valid_ids() {
    let out = bench(&["run", "--scenario", "12", "--algo", "ppo"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("valid ids are 1-8"), "{}", stderr(&out));
}

#[test]
fn validate_rejects_a_crane_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"scenario": 7, "env": "spge", "algo": "dqn"}"#).unwrap();
    let out = bench(&["validate", "--config", p(&bad)]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("crane"), "{}", stderr(&out));

    let custom = dir.path().join("custom.json");
    let spec = serde_json::json!({
        "scenario": {
            "vessel": {"bays": 2, "rows": 2, "tiers": 2},
            "yard": {"bays": 2, "rows": 2, "tiers": 2},
            "num_containers": 6, "num_groups": 2, "num_cranes": 2, "seed": 0
        },
        "env": "spge",
        "algo": "ppo"
    });
    fs::write(&custom, spec.to_string()).unwrap();
    assert!(!bench(&["validate", "--config", p(&custom)]).status.success());

    let good = dir.path().join("good.json");
    fs::write(&good, r#"{"scenario": 7, "env": "spaec", "algo": "dqn"}"#).unwrap();
    let out = bench(&["validate", "--config", p(&good)]);
    assert!(out.status.success(), "{}", stderr(&out));
}

#[test]
fn malformed_inputs_fail_with_a_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let junk = dir.path().join("junk.json");
    fs::write(&junk, "{ not json").unwrap();
    for args in [
        vec!["validate", "--config", p(&junk)],
        vec!["oracle", "--instance", p(&junk)],
        vec!["plotdata", "--in", p(dir.path()), "--out", p(dir.path())],
        vec!["run", "--scenario", "1", "--algo", "sarsa"],
    ] {
        let out = bench(&args);
        assert!(!out.status.success(), "{args:?}");
        assert!(!stderr(&out).is_empty());
    }
}

#[test]
fn zero_budget_run_writes_one_point_per_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = bench(&[
        "run", "--scenario", "1", "--algo", "trpo", "--reps", "1", "--timesteps", "0",
        "--eval-episodes", "2", "--out", p(dir.path()),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let curves = fs::read_to_string(dir.path().join("curves.csv")).unwrap();
    let lines: Vec<&str> = curves.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("s1-spge-trpo-0,1,trpo,spge,0,0,"));
    assert!(dir.path().join("plotdata/scenario1_spge.csv").exists());
}

#[test]
fn run_then_compare_gives_the_variant_table() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for (dir, env) in [(&a, "spge-mc"), (&b, "spaec")] {
        let out = bench(&[
            "run", "--scenario", "6", "--algo", "a2c,ppo", "--env", env, "--reps", "2",
            "--timesteps", "60", "--eval-every", "30", "--eval-episodes", "1",
            "--out", p(dir.path()),
        ]);
        assert!(out.status.success(), "{}", stderr(&out));
    }
    let table = a.path().join("cmp/table.csv");
    let out = bench(&["compare", "--a", p(a.path()), "--b", p(b.path()), "--out", p(&table)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = fs::read_to_string(&table).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "scenario,algo,kpi,mc_runs,mc_mean,mc_std,spaec_runs,spaec_mean,spaec_std,mc,spaec,diff,t,dof,p,significant,marker"
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    // 1 scenario x 2 algorithms x 2 indicators.
    assert_eq!(rows.len(), 4);
    let keys: Vec<(&str, &str)> = rows.iter().map(|r| (r[1], r[2])).collect();
    assert_eq!(keys, [("a2c", "shifters"), ("a2c", "optime"), ("ppo", "shifters"), ("ppo", "optime")]);
    for r in &rows {
        let diff: f64 = r[11].parse().unwrap();
        let mc: f64 = r[4].parse().unwrap();
        let spaec: f64 = r[7].parse().unwrap();
        assert!((diff - (mc - spaec)).abs() < 1e-9);
        assert!(r[9].contains(" (") && r[10].ends_with(')'));
    }
}

#[test]
fn compare_flags_an_injected_shift() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let base = [4.0, 4.01, 3.99, 4.02, 3.98];
    let shifted: Vec<f64> = base.iter().map(|x| x - 2.0).collect();
    write_synthetic_curves(a.path(), "spge-mc", &[("6", "dqn", shifted), ("6", "ppo", base.to_vec())]);
    write_synthetic_curves(b.path(), "spaec", &[("6", "dqn", base.to_vec()), ("6", "ppo", base.to_vec())]);
    let table = a.path().join("t.csv");
    let out = bench(&["compare", "--a", p(a.path()), "--b", p(b.path()), "--out", p(&table)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = fs::read_to_string(&table).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split(',').collect()).collect();
    for r in &rows {
        let diff: f64 = r[11].parse().unwrap();
        if r[1] == "dqn" {
            assert!(diff < 0.0);
            assert_eq!((r[15], r[16]), ("true", "mc_better"));
        } else {
            assert_eq!(diff, 0.0);
            assert_eq!((r[15], r[16]), ("false", ""));
        }
    }
}

#[test]
fn plotdata_rebuilds_bands_from_curves() {
    let a = tempfile::tempdir().unwrap();
    write_synthetic_curves(a.path(), "spge", &[("2", "a2c", vec![1.0, 3.0]), ("2", "dqn", vec![2.0, 2.0])]);
    let out_dir = a.path().join("plots");
    let out = bench(&["plotdata", "--in", p(a.path()), "--out", p(&out_dir)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = fs::read_to_string(out_dir.join("scenario2_spge.csv")).unwrap();
    assert!(text.contains("\na2c,100,2,2,1.4142135623730951,"), "{text}");
    assert!(text.contains("\ndqn,100,2,2,0,"), "{text}");
}

#[test]
fn oracle_reports_optimum_and_greedy() {
    let dir = tempfile::tempdir().unwrap();
    let spec = ScenarioSpec {
        vessel: GridSpec::new(1, 2, 3),
        yard: GridSpec::new(1, 2, 3),
        num_containers: 6,
        num_groups: 3,
        num_cranes: 1,
        seed: 4,
        pre_occupancy: 0.0,
    };
    let path = dir.path().join("inst.json");
    fs::write(&path, generate_instance(&spec).unwrap().to_json()).unwrap();
    let out = bench(&["oracle", "--instance", p(&path)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["objective"], "shifters");
    let best = v["oracle"]["best_value"].as_f64().unwrap();
    let greedy = v["greedy"]["shifters"].as_f64().unwrap();
    assert!(best <= greedy);
    assert_eq!(v["oracle"]["best_sequence"].as_array().unwrap().len(), 6);

    let multi = ScenarioSpec { num_cranes: 2, ..spec };
    fs::write(&path, generate_instance(&multi).unwrap().to_json()).unwrap();
    let out = bench(&["oracle", "--instance", p(&path)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["objective"], "makespan");
    assert!(v["oracle"]["best_value"].as_f64().unwrap() <= v["greedy"]["operation_time"].as_f64().unwrap());

    let big = ScenarioSpec { num_containers: 6, vessel: GridSpec::new(3, 5, 3), yard: GridSpec::new(3, 5, 3), ..spec };
    fs::write(&path, generate_instance(&ScenarioSpec { num_containers: 12, ..big }).unwrap().to_json()).unwrap();
    let out = bench(&["oracle", "--instance", p(&path)]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("guard"), "{}", stderr(&out));
}
