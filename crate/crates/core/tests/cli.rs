use std::process::{Command, Output};

use serde_json::Value;

fn fermode(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fermode")).args(args).output().unwrap()
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(fermode(&["teleport", "--alpha2", "1.5"]).status.code(), Some(2));
    assert_eq!(fermode(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(fermode(&["verify-monotone", "--trials", "0"]).status.code(), Some(2));
    assert_eq!(fermode(&["show-state", "--input", "/nonexistent/state.json"]).status.code(), Some(1));
}

#[test]
fn teleport_report_has_schema_and_passes() {
    let out = fermode(&["teleport", "--alpha2", "0.7", "--trials", "3", "--seed", "9"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["schema"], "fermode-report/1");
    assert_eq!(r["command"], "teleport");
    assert_eq!(r["config"]["common"]["seed"], 9);
    assert_eq!(r["verdict"]["passed"], true);
    assert!(!r["results"].as_array().unwrap().is_empty());
}

#[test]
fn state_files_round_trip_through_the_cli() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("e.json");
    let p = path.to_str().unwrap();
    assert_eq!(fermode(&["show-state", "--alpha2", "0.25", "--save", p]).status.code(), Some(0));
    let out = fermode(&["show-state", "--input", p]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["results"].as_array().unwrap().len(), 2);
}

#[test]
fn no_conversion_small_run_passes() {
    for start in ["boson", "fermion"] {
        let out = fermode(&["verify-no-conversion", "--start", start, "--trials", "20", "--seed", "3"]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn csv_output_writes_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    let out = fermode(&["dense-code", "--trials", "4", "--format", "csv", "--output", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(path).unwrap();
    assert_eq!(text.lines().count(), 5);
}
