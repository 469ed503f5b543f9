use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn chainlab(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chainlab"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

const CONFIG: &str = r#"
schema_version = 1
out = "from-config"
horizon = 10
master_seed = 3

[corpus]
source = "kernel_states"
chains = 6

[kernel]
kind = "random_finite"
states = 6
seed = 1

[simulate]
decodings = [{ mode = "greedy" }]
temperature_sweep = [0.5, 1.0]
"#;

#[test]
fn run_analyze_report() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("c.toml"), CONFIG).unwrap();
    let run = chainlab(&["run", "--config", "c.toml", "--out", "r", "--master-seed", "9", "--parallelism", "2"], tmp.path());
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(String::from_utf8_lossy(&run.stdout).contains("6 chains (0 failed)"));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("r/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["master_seed"], 9);

    let analyze = chainlab(&["analyze", "r"], tmp.path());
    assert!(analyze.status.success(), "{}", String::from_utf8_lossy(&analyze.stderr));
    assert!(tmp.path().join("r/analysis/drift.csv").exists());

    let report = chainlab(&["report", "r/analysis", "--out", "rep"], tmp.path());
    assert!(report.status.success());
    assert!(String::from_utf8_lossy(&report.stdout).starts_with("# Report"));
    assert!(tmp.path().join("rep/report.md").exists());
}

#[test]
fn simulate_uses_config_out() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("c.toml"), CONFIG).unwrap();
    let sim = chainlab(&["simulate", "--config", "c.toml"], tmp.path());
    assert!(sim.status.success(), "{}", String::from_utf8_lossy(&sim.stderr));
    assert_eq!(String::from_utf8_lossy(&sim.stdout).lines().count(), 4);
    assert!(tmp.path().join("from-config/simulate_sweep.csv").exists());
}

#[test]
fn config_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = chainlab(&["run"], tmp.path());
    assert_eq!(missing.status.code(), Some(2));

    fs::write(tmp.path().join("bad.toml"), "schema_version = 1\nhorizon = \"long\"\n").unwrap();
    let bad = chainlab(&["run", "--config", "bad.toml"], tmp.path());
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("horizon"));

    fs::write(tmp.path().join("v2.toml"), CONFIG.replace("schema_version = 1", "schema_version = 2")).unwrap();
    assert_eq!(chainlab(&["run", "--config", "v2.toml"], tmp.path()).status.code(), Some(2));
}

#[test]
fn data_errors_exit_1() {
    let tmp = tempfile::tempdir().unwrap();
    fs::create_dir(tmp.path().join("empty")).unwrap();
    let out = chainlab(&["report", "empty"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bundled_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut n = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let cfg = chainlab::experiment::ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert!(cfg.out.is_some());
        n += 1;
    }
    assert_eq!(n, 3);
}
