use std::process::Command;

use sbm_lab::harness::{emit_phase_csv, run_sweep, SweepSpec};

const SMALL: &str = r#"
base_seed = 99
trials = 3
algorithms = ["above_ks", "detect", "lowdeg_bound"]
n = [1500, 2500]
d = [8.0]
q = [6]
lambda = [0.5, 0.9]
"#;

#[test]
fn grid_times_trials_records() {
    let spec = SweepSpec::parse(SMALL).unwrap();
    let records = run_sweep(&spec).unwrap();
    assert_eq!(records.len(), 12);
    assert!(records.iter().all(|r| !r.is_error()), "{:?}", records.iter().find(|r| r.is_error()));
    let csv = emit_phase_csv(&records).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert_eq!(csv, emit_phase_csv(&run_sweep(&spec).unwrap()).unwrap());
}

#[test]
fn cli_sweep_writes_csv_and_jsonl() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("sweep.toml");
    std::fs::write(&config, SMALL).unwrap();
    let (csv, jsonl) = (dir.path().join("phase.csv"), dir.path().join("trials.jsonl"));
    let status = Command::new(env!("CARGO_BIN_EXE_sbm-lab"))
        .args(["sweep", "--config"])
        .arg(&config)
        .arg("--csv")
        .arg(&csv)
        .arg("--jsonl")
        .arg(&jsonl)
        .status()
        .unwrap();
    assert!(status.success());
    let table = std::fs::read_to_string(&csv).unwrap();
    assert!(table.starts_with("point,n,q,d,lambda"));
    let lines = std::fs::read_to_string(&jsonl).unwrap();
    assert_eq!(lines.lines().count(), 12);
    for line in lines.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v.get("wall_time_ms").is_some());
    }
}

#[test]
fn cli_rejects_bad_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    std::fs::write(&config, "base_seed = 1\ntrials = 0\nn = [10]\nd = [1.0]\nq = [2]\nlambda = [0.5]\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_sbm-lab")).args(["sweep", "--config"]).arg(&config).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("trials"));
}

#[test]
fn cli_lowdeg_exact_reports_sandwich() {
    let out = Command::new(env!("CARGO_BIN_EXE_sbm-lab"))
        .args(["lowdeg", "--n", "4", "--q", "2", "--a", "3", "--b", "1", "--D", "2", "--exact"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let exact = v["report"]["corr_exact"].as_f64().unwrap();
    let bound = v["u_bound"].as_f64().unwrap();
    assert!(exact > 0.0 && exact <= bound + 1e-12);
}
