use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command;

use ips::cli::{emit_snapshots, run_config, ExperimentConfig};
use ips::dynamics::evolve;
use ips::randomness::{ModelParams, PoissonField};
use ips::topology::{LatticeBox, Point};

fn config(text: &str, out: &Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::parse(text, "test").unwrap();
    cfg.output = Some(out.to_path_buf());
    cfg
}

const SIMULATE: &str = r#"{
  "experiment": {"kind": "simulate", "times": [0, 1, 2], "snapshots": [0, 2], "intervals": true, "event_log": true},
  "topology": {"graph": "lattice", "d": 2, "R": 6},
  "model": {"kind": "CPS", "lambda": 2, "gamma": 1, "nu": 1},
  "horizon": 2,
  "replicas": 3,
  "seed": 11
}"#;

/// File name → contents with the provenance comment and hash key removed.
fn contents(dir: &Path) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
                continue;
            }
            let name = p.strip_prefix(dir).unwrap().display().to_string();
            if name == "config.resolved.json" {
                continue;
            }
            let text = fs::read_to_string(&p).unwrap();
            let body: Vec<&str> = text
                .lines()
                .filter(|l| !l.starts_with("# config_sha256=") && !l.contains("\"config_sha256\""))
                .collect();
            out.insert(name, body.join("\n"));
        }
    }
    out
}

#[test]
fn runs_are_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let a = run_config(config(SIMULATE, &tmp.path().join("a"))).unwrap();
    let b = run_config(config(SIMULATE, &tmp.path().join("a"))).unwrap();
    assert_eq!(a.config_hash, b.config_hash);
    let first = contents(&a.output);
    assert!(first.contains_key("trajectory_stats.csv"));
    assert!(first.keys().any(|k| k.starts_with("snapshots")));

    // the echoed configuration reproduces the run elsewhere
    let echoed = fs::read_to_string(a.output.join("config.resolved.json")).unwrap();
    let c = run_config(config(&echoed, &tmp.path().join("c"))).unwrap();
    assert_eq!(first, contents(&c.output));
}

#[test]
fn every_csv_carries_the_config_hash() {
    let tmp = tempfile::tempdir().unwrap();
    let r = run_config(config(SIMULATE, tmp.path())).unwrap();
    for f in r.files.iter().filter(|f| f.extension().is_some_and(|e| e == "csv")) {
        let text = fs::read_to_string(f).unwrap();
        assert_eq!(text.lines().next().unwrap(), format!("# config_sha256={}", r.config_hash), "{}", f.display());
    }
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(r.output.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["config_sha256"], r.config_hash);
}

#[test]
fn echoed_config_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(SIMULATE, tmp.path()).resolve().unwrap();
    let back = ExperimentConfig::parse(&cfg.to_json(), "echo").unwrap();
    assert_eq!(cfg, back);
    assert_eq!(cfg.hash(), back.hash());
}

#[test]
fn unknown_keys_are_rejected_with_position() {
    let err = ExperimentConfig::parse("{\n  \"experiment\": {\"kind\": \"fkg\"},\n  \"sed\": 1\n}", "bad.json").unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("bad.json:3:"), "{msg}");
}

#[test]
fn invalid_combinations_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    for text in [
        // coupling needs a stirring model
        r#"{"experiment": {"kind": "couple", "a": ["0"], "b": ["0"], "c": ["0"]},
            "topology": {"graph": "lattice", "d": 1, "R": 5},
            "model": {"kind": "CP", "lambda": 1, "gamma": 1}, "seed": 1}"#,
        r#"{"experiment": {"kind": "isoperimetric", "d": 5}, "seed": 1}"#,
        r#"{"experiment": {"kind": "simulate", "times": [20]},
            "topology": {"graph": "lattice", "d": 1, "R": 5},
            "model": {"kind": "RM", "lambda": 1}, "horizon": 10, "seed": 1}"#,
    ] {
        assert!(config(text, tmp.path()).resolve().is_err(), "{text}");
    }
}

#[test]
fn snapshot_at_time_zero_is_the_initial_set() {
    let tmp = tempfile::tempdir().unwrap();
    let g = LatticeBox::new(2, 4).unwrap();
    let init = [Point::new(&[0, 0]), Point::new(&[1, -2])];
    let field = PoissonField::new(&g, ModelParams::rms(1.0), 1.0, 3).unwrap();
    let traj = evolve(&init, &field, 1.0).unwrap();
    let files = emit_snapshots(&g, &traj, &[0.0], false, tmp.path(), "abc").unwrap();
    let text = fs::read_to_string(&files[0]).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "# config_sha256=abc");
    assert_eq!(lines[1], "x,y");
    let rows: std::collections::BTreeSet<&str> = lines[2..].iter().copied().collect();
    assert_eq!(rows, ["0,0", "1,-2"].into_iter().collect());
}

#[test]
fn binary_reports_errors_and_runs_configs() {
    let bin = env!("CARGO_BIN_EXE_ips");
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.json");
    fs::write(&bad, "{\"experiment\": {\"kind\": \"nope\"}, \"seed\": 1}").unwrap();
    let out = Command::new(bin).arg("run").arg(&bad).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));

    let good = tmp.path().join("thresholds.json");
    fs::write(&good, r#"{"experiment": {"kind": "tree-thresholds", "ds": [4], "nus": [1]}, "seed": 1}"#).unwrap();
    let out = Command::new(bin)
        .arg("run")
        .arg(&good)
        .env("IPS_OUTPUT_ROOT", tmp.path().join("root"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(tmp.path().join("root/thresholds/thresholds.csv")).unwrap();
    assert!(csv.lines().nth(2).unwrap().starts_with("4,1,0.25,5,"));
}
