use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};

fn csl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_csl")).args(args).output().expect("csl runs")
}

fn stdout_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stdout);
    serde_json::from_str(text.lines().last().expect("a line on stdout")).expect("stdout is JSON")
}

fn error_code(out: &Output) -> String {
    assert_eq!(out.status.code(), Some(2));
    stdout_json(out)["error"].as_str().unwrap().to_string()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn rational_alpha_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = csl(&["cf", "--alpha", "0.5", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(error_code(&out), "rational-input");
}

#[test]
fn oversized_box_hits_the_cap() {
    let dir = tempfile::tempdir().unwrap();
    let out = csl(&["ids", "--n", "1000000", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(error_code(&out), "cap-exceeded");
}

#[test]
fn unknown_check_and_bad_usage() {
    assert_eq!(error_code(&csl(&["verify", "--check", "no-such-check"])), "unknown-check");
    assert_eq!(error_code(&csl(&["frobnicate"])), "usage");
    assert_eq!(error_code(&csl(&["cf", "--alpha", "pi-ish"])), "usage");
}

#[test]
fn bad_configs() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    std::fs::write(&path, r#"{"version": 1, "lambda": 3}"#).unwrap();
    assert_eq!(error_code(&csl(&["cf", "--config", path.to_str().unwrap()])), "invalid-config");
    let missing = dir.path().join("missing.json");
    assert_eq!(error_code(&csl(&["cf", "--config", missing.to_str().unwrap()])), "io-error");
}

#[test]
fn default_config_round_trips_through_a_file() {
    let out = csl(&["config"]);
    assert!(out.status.success());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    std::fs::write(&path, &out.stdout).unwrap();
    let run = dir.path().join("run");
    let out = csl(&["cf", "--config", path.to_str().unwrap(), "--out", run.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(std::fs::read(run.join("config.json")).unwrap(), std::fs::read(&path).unwrap());
}

#[test]
fn cf_run_directory() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("cf");
    let out = csl(&["cf", "--alpha", "silver", "--depth", "12", "--out", run.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(stdout_json(&out)["pass"], true);

    let csv = std::fs::read_to_string(run.join("cf.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "k,a_k,p_k,q_k");
    assert_eq!(rows.len(), 13);
    // √2 − 1 = [0; 2, 2, …]: q = 2, 5, 12, 29, …
    assert_eq!(rows[1], "1,2,1,2");
    assert_eq!(rows[4], "4,2,12,29");

    let manifest = read_json(&run.join("manifest.json"));
    assert_eq!(manifest["subcommand"], "cf");
    for f in manifest["files"].as_array().unwrap() {
        let bytes = std::fs::read(run.join(f["name"].as_str().unwrap())).unwrap();
        assert_eq!(f["bytes"].as_u64().unwrap(), bytes.len() as u64);
        assert_eq!(f["sha256"].as_str().unwrap(), hex::encode(Sha256::digest(&bytes)));
    }
    let names: Vec<&str> = manifest["files"].as_array().unwrap().iter().map(|f| f["name"].as_str().unwrap()).collect();
    assert!(names.contains(&"cf.csv") && names.contains(&"report.json") && names.contains(&"config.json"));
}

#[test]
fn orbit_reports_are_thread_independent() {
    let dir = tempfile::tempdir().unwrap();
    let mut reports = Vec::new();
    for threads in ["1", "3"] {
        let run = dir.path().join(threads);
        let out = csl(&["orbit", "--threads", threads, "--out", run.to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
        assert!(run.join("partition_k8.csv").exists());
        reports.push(std::fs::read(run.join("report.json")).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
}

#[test]
fn single_check_selection() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("v");
    let out = csl(&["verify", "--check", "cf-sandwich", "--out", run.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let report = read_json(&run.join("report.json"));
    let checks = report["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 1);
    assert_eq!(checks[0]["id"], "cf-sandwich");
    assert_eq!(checks[0]["pass"], true);
}

#[test]
fn eigfunc_writes_decay_profiles() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("e");
    let cfg = dir.path().join("c.json");
    let mut v: Value = serde_json::from_slice(&csl(&["config"]).stdout).unwrap();
    v["localization"]["pairs"] = 4.into();
    v["localization"]["n"] = 1024.into();
    v["localization"]["lyapunov_n"] = 20000.into();
    std::fs::write(&cfg, v.to_string()).unwrap();
    let out = csl(&["eigfunc", "--vectors", "--config", cfg.to_str().unwrap(), "--out", run.to_str().unwrap()]);
    assert!(out.status.code().unwrap() < 2, "{}", String::from_utf8_lossy(&out.stdout));
    let csv = std::fs::read_to_string(run.join("eigenpairs.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(run.join("decay_003.csv").exists());
    let bin = std::fs::read(run.join("eigenvectors.bin")).unwrap();
    let header_end = bin.iter().position(|&b| b == b'\n').unwrap();
    assert_eq!((bin.len() - header_end - 1) % 8, 0);
}
