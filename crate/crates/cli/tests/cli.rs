use std::f64::consts::PI;
use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn seqreg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_seqreg")).args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn stderr_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    assert_eq!(text.trim_end().lines().count(), 1, "one diagnostic line: {text}");
    serde_json::from_str(text.trim_end()).expect("stderr is JSON")
}

#[test]
fn constants_for_the_exponential_row() {
    let out = seqreg(&["constants", "--dist", "exp:1", "--p", "2"]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert_eq!(v["rho"], -1.0);
    assert_eq!(v["c_ell"], 1.0);
    let zeta = v["zeta"].as_f64().unwrap();
    assert!((zeta - PI / (PI / 4.0).sin()).abs() < 1e-12);
}

#[test]
fn constants_without_zeta_still_print_the_table_row() {
    let out = seqreg(&["constants", "--dist", "uniform:3", "--p", "2"]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert!(v["zeta"].is_null());
    assert!(v.get("rate").is_none());
}

#[test]
fn bandwidth_matches_the_library() {
    let out = seqreg(&["bandwidth", "--p", "2", "--beta", "1", "--n", "1000000"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let row: Vec<f64> = text.lines().nth(1).unwrap().split('\t').map(|s| s.parse().unwrap()).collect();
    let a = seqreg::bandwidth::a_opt_pointwise(1e6, 1.0, 2.0).unwrap();
    let au = seqreg::bandwidth::a_opt_uniform(1e6, 1.0, 2.0).unwrap();
    assert_eq!(row[0], 1e6);
    assert_eq!(row[1], a);
    assert_eq!(row[2], seqreg::bandwidth::h_opt(1e6, a).unwrap());
    assert_eq!(row[3], au);
}

#[test]
fn unknown_subcommand_is_a_config_error() {
    let out = seqreg(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "config");
}

#[test]
fn unknown_config_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, "schema = 1\n[run]\nreplicas = 3\n").unwrap();
    let out = seqreg(&["consistency", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "config");
}

#[test]
fn runtime_failure_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sb.toml");
    fs::write(&path, "schema = 1\n[smallball]\nh_grid = [1e-4, 0.2, 0.3, 0.4, 0.5]\n").unwrap();
    let out = seqreg(&["smallball", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["error"], "runtime");
}

const SMALL: &str = "schema = 1
[design]
process = \"gaussian_ma\"
ma_ratio = 0.5
tau = 10
[run]
n_grid = [200, 800]
replicates = 6
seed = 3
[eval]
points = [[0.0], [0.3, -0.2]]
";

fn run_into(dir: &std::path::Path, cfg: &std::path::Path, threads: &str) -> (Vec<u8>, Vec<u8>) {
    let out = seqreg(&[
        "consistency",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
        "--threads",
        threads,
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    (
        fs::read(dir.join("consistency_records.csv")).unwrap(),
        fs::read(dir.join("consistency_summary.json")).unwrap(),
    )
}

#[test]
fn outputs_are_byte_identical_across_runs_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.toml");
    fs::write(&cfg, SMALL).unwrap();
    let a = run_into(&dir.path().join("a"), &cfg, "1");
    let b = run_into(&dir.path().join("b"), &cfg, "1");
    let c = run_into(&dir.path().join("c"), &cfg, "4");
    assert_eq!(a, b);
    assert_eq!(a, c);

    let csv = String::from_utf8(a.0).unwrap();
    assert!(csv.starts_with(
        "experiment,n,replicate,point,estimate,truth,abs_error,empty_window,phi_hat,elapsed_ms\n"
    ));
    assert_eq!(csv.lines().count(), 1 + 2 * 6 * 2);
    let summary: Value = serde_json::from_slice(&a.1).unwrap();
    assert_eq!(summary["config"]["replicates"], 6);
    assert_eq!(summary["config"]["seed"], 3);
}

#[test]
fn seed_flag_overrides_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.toml");
    fs::write(&cfg, SMALL).unwrap();
    let out = seqreg(&["consistency", "--config", cfg.to_str().unwrap(), "--seed", "99"]);
    assert!(out.status.success());
    assert_eq!(stdout_json(&out)["config"]["seed"], 99);
}
