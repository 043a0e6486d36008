use std::process::{Command, Output};

use parseq_cli::CSV_HEADER;

fn parseq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_parseq")).args(args).output().expect("binary runs")
}

/// Data rows of a CSV file as field vectors.
fn rows(path: &std::path::Path) -> Vec<Vec<String>> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    lines.map(|l| l.split(',').map(str::to_owned).collect()).collect()
}

fn run_to_file(extra: &[&str]) -> (Output, Vec<Vec<String>>) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    let mut args = vec!["run"];
    args.extend_from_slice(extra);
    args.extend_from_slice(&["--output", path.to_str().unwrap()]);
    let out = parseq(&args);
    let r = if path.exists() { rows(&path) } else { Vec::new() };
    (out, r)
}

const ITERATIONS: usize = 6;
const CONVERGED: usize = 7;
const WALL: usize = 9;

#[test]
fn newton_solves_s5_in_one_iteration() {
    let (out, rows) = run_to_file(&["--experiment", "s5", "--methods", "newton", "--seq-lens", "64", "--seeds", "3", "--batch", "4"]);
    assert!(out.status.success());
    assert_eq!(rows.len(), 12);
    assert!(rows.iter().all(|r| r[ITERATIONS] == "1" && r[CONVERGED] == "true"));
}

#[test]
fn jacobi_takes_exactly_t_on_s5() {
    let (out, rows) = run_to_file(&["--experiment", "s5", "--methods", "jacobi", "--seq-lens", "8", "--batch", "2"]);
    assert!(out.status.success());
    assert_eq!(rows.len(), 20);
    assert!(rows.iter().all(|r| r[ITERATIONS] == "8"));
}

#[test]
fn single_step_linear_system_is_one_iteration_for_every_method() {
    let (out, rows) = run_to_file(&["--experiment", "custom-lds", "--seq-lens", "1", "--seeds", "2", "--batch", "2"]);
    assert!(out.status.success());
    assert_eq!(rows.len(), 7 * 4);
    assert!(rows.iter().all(|r| r[ITERATIONS] == "1"), "{rows:?}");
}

#[test]
fn identical_configs_give_identical_rows_apart_from_timing() {
    let args = ["--experiment", "gru", "--methods", "quasi-newton,picard", "--seq-lens", "16", "--dims", "3", "--seeds", "2", "--batch", "3"];
    let strip = |mut rows: Vec<Vec<String>>| {
        for r in &mut rows {
            r[WALL].clear();
        }
        rows
    };
    let (_, a) = run_to_file(&args);
    let (_, b) = run_to_file(&args);
    assert!(!a.is_empty());
    assert_eq!(strip(a), strip(b));
}

#[test]
fn root_seed_changes_the_instances() {
    let args = |seed| ["--experiment", "gru", "--methods", "picard", "--seq-lens", "32", "--seeds", "1", "--batch", "2", "--root-seed", seed];
    let (_, a) = run_to_file(&args("1"));
    let (_, b) = run_to_file(&args("2"));
    let merits = |rows: &[Vec<String>]| rows.iter().map(|r| r[8].clone()).collect::<Vec<_>>();
    assert_ne!(merits(&a), merits(&b));
}

#[test]
fn jsonl_uses_the_csv_field_names() {
    let out = parseq(&["run", "--experiment", "s5", "--methods", "sequential", "--seq-lens", "4", "--seeds", "1", "--batch", "1", "--format", "jsonl"]);
    assert!(out.status.success());
    let line = String::from_utf8(out.stdout).unwrap();
    let v: serde_json::Value = serde_json::from_str(line.trim()).unwrap();
    let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
    let mut expected: Vec<&str> = CSV_HEADER.split(',').collect();
    expected.sort();
    let mut keys = keys;
    keys.sort();
    assert_eq!(keys, expected);
    assert_eq!(v["iterations"], 4);
}

#[test]
fn bad_flags_are_usage_errors() {
    for args in [
        &["run", "--experiment", "nope"][..],
        &["run", "--experiment", "s5", "--methods", "newtown"],
        &["run", "--experiment", "s5", "--seeds", "0"],
        &["run", "--experiment", "s5", "--tol", "-1"],
        &["run", "--experiment", "s5", "--seq-lens", "x"],
        &["run", "--experiment", "s5", "--elk-k", "2"],
        &["frobnicate"],
    ] {
        assert_eq!(parseq(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn bad_thread_count_is_a_usage_error() {
    let out = Command::new(env!("CARGO_BIN_EXE_parseq")).arg("verify").env("PARSEQ_THREADS", "0").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_passes_every_suite() {
    let out = Command::new(env!("CARGO_BIN_EXE_parseq")).arg("verify").env("PARSEQ_THREADS", "2").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("[PASS]")).count(), 3, "{text}");
}
