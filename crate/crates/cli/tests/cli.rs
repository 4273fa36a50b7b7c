use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cyclic-urn"))
        .args(args)
        .env("CYCLIC_URN_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

const SMALL_VERIFY: &[&str] = &[
    "verify", "--suite", "all", "--m", "7", "--seed", "1", "--n", "200", "--reps", "1000",
    "--rate-grid", "100,200,400,800", "--rate-reps", "400", "--limit-n", "20000", "--pool", "5000",
    "--bn-grid", "50,100,200", "--bn-samples", "1000", "--split-reps", "5000",
];

#[test]
fn verify_output_is_reproducible() {
    let a = run(SMALL_VERIFY);
    let b = run(SMALL_VERIFY);
    assert!(!a.stdout.is_empty());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.status.code(), b.status.code());
    let code = a.status.code().unwrap();
    assert!(code == 0 || code == 1, "verdict exit code, got {code}");
    let report = json(&a);
    assert_eq!(report["pass"].as_bool().unwrap(), code == 0);
    assert!(report["checks"].as_array().unwrap().len() >= 10);
}

#[test]
fn verify_is_independent_of_thread_count() {
    let a = run(SMALL_VERIFY);
    let b = Command::new(env!("CARGO_BIN_EXE_cyclic-urn"))
        .args(SMALL_VERIFY)
        .env("CYCLIC_URN_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn eigenplot_has_one_row_per_index() {
    let out = run(&["spectral", "--m", "12", "--eigenplot", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "k,lambda,mu");
    assert_eq!(lines.len(), 13);
}

#[test]
fn spectral_json_reports_ranks() {
    let out = run(&["spectral", "--m", "6"]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["rank_sigma"], 2);
    assert_eq!(v["r"], 0);
    assert_eq!(v["critical"], true);
}

#[test]
fn exact_oracle_matches_known_moment() {
    let out = run(&["moments", "--m", "3", "--n", "2", "--exact-oracle"]);
    assert!(out.status.success());
    let v = json(&out);
    let re = v["second_u"][1][2][0].as_f64().unwrap();
    assert!((re - 1.5).abs() < 1e-12);
    assert_eq!(v["oracle"]["match"], true);
}

#[test]
fn simulate_csv_has_checkpoint_rows() {
    let out = run(&[
        "simulate", "--m", "4", "--steps", "10", "--reps", "3", "--seed", "5",
        "--checkpoints", "0,5,10", "--format", "csv",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 1 + 3 * 3);
}

#[test]
fn out_dir_receives_artifacts_and_stdout_stays_empty() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().to_str().unwrap();
    let out = run(&["fixpoint", "--m", "7", "--pool", "2000", "--depth", "5", "--out-dir", path]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    assert!(dir.path().join("fixpoint.json").exists());
    assert!(dir.path().join("fixpoint.csv").exists());
}

#[test]
fn invalid_parameters_exit_with_usage_code() {
    assert_eq!(run(&["spectral", "--m", "1"]).status.code(), Some(2));
    assert_eq!(run(&["moments", "--m", "9", "--n", "20", "--exact-oracle"]).status.code(), Some(2));
    assert_eq!(run(&["verify", "--suite", "clt", "--m", "7", "--reps", "10"]).status.code(), Some(2));
    assert_eq!(run(&["bogus"]).status.code(), Some(2));
}

#[test]
fn unwritable_out_dir_exits_with_io_code() {
    let file = tempfile::NamedTempFile::new().unwrap();
    let path = file.path().join("sub");
    let out = run(&["spectral", "--m", "3", "--out-dir", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}
