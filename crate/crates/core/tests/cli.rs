//! End-to-end runs of the `bergman` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bergman(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bergman")).args(args).env_remove("BERGMAN_THREADS").output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("terminated by signal")
}

fn write(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn read_json(p: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(p).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const QUARTIC: &str = r#"{"dimension":1,"monomials":[
  {"alpha":[1],"beta":[1],"re":"1"},
  {"alpha":[2],"beta":[2],"re":"1/10"}]}"#;

#[test]
fn coeffs_for_fubini_study_writes_rational_strings() {
    let dir = TempDir::new().unwrap();
    let spec = write(&dir, "fs.json", r#"{"builtin":"fubini_study","dimension":1}"#);
    let out = dir.path().join("fs_out.json");
    let run = bergman(&["coeffs", "--spec", s(&spec), "--order", "3", "--cap", "2", "--out", s(&out)]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let r = read_json(&out);
    let coeffs = r["coefficients"].as_array().unwrap();
    assert_eq!(coeffs.len(), 4);
    let b1 = coeffs[1]["terms"].as_array().unwrap();
    assert_eq!(b1.len(), 1);
    assert_eq!(b1[0]["re"], "1");
    assert_eq!(b1[0]["im"], "0");
    for m in 2..=3 {
        assert!(coeffs[m]["terms"].as_array().unwrap().is_empty());
    }
    assert_eq!(r["required_input_order"], 24);
}

#[test]
fn coeffs_output_is_deterministic_and_thread_independent() {
    let dir = TempDir::new().unwrap();
    let spec = write(&dir, "q.json", QUARTIC);
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    assert_eq!(code(&bergman(&["coeffs", "--spec", s(&spec), "--order", "3", "--out", s(&a)])), 0);
    let run = Command::new(env!("CARGO_BIN_EXE_bergman"))
        .args(["coeffs", "--spec", s(&spec), "--order", "3", "--out", s(&b)])
        .env("BERGMAN_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(code(&run), 0);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn echoed_spec_round_trips() {
    let dir = TempDir::new().unwrap();
    // Only the lower half of the Hermitian pair is given; the echo carries both.
    let spec = write(
        &dir,
        "s.json",
        r#"{"dimension":1,"monomials":[{"alpha":[1],"beta":[1],"re":"1"},{"alpha":[2],"beta":[1],"re":"1/3","im":"1/5"}]}"#,
    );
    let first = dir.path().join("first.json");
    assert_eq!(code(&bergman(&["coeffs", "--spec", s(&spec), "--order", "2", "--out", s(&first)])), 0);
    let r1 = read_json(&first);
    let echoed = write(&dir, "echo.json", &serde_json::to_string(&r1["spec"]).unwrap());
    let second = dir.path().join("second.json");
    assert_eq!(code(&bergman(&["coeffs", "--spec", s(&echoed), "--order", "2", "--out", s(&second)])), 0);
    let r2 = read_json(&second);
    assert_eq!(r1["input_hash"], r2["input_hash"]);
    assert_eq!(r1["spec"], r2["spec"]);
    assert_eq!(r1["coefficients"], r2["coefficients"]);
    assert_eq!(r1["spec"]["monomials"].as_array().unwrap().len(), 3);
}

#[test]
fn conflicting_hermitian_pair_is_a_spec_error() {
    let dir = TempDir::new().unwrap();
    let spec = write(
        &dir,
        "bad.json",
        r#"{"dimension":1,"monomials":[{"alpha":[1],"beta":[1],"re":"1"},{"alpha":[2],"beta":[1],"re":"1"},{"alpha":[1],"beta":[2],"re":"2"}]}"#,
    );
    let out = dir.path().join("o.json");
    let run = bergman(&["coeffs", "--spec", s(&spec), "--order", "1", "--out", s(&out)]);
    assert_eq!(code(&run), 2);
    let err = String::from_utf8_lossy(&run.stderr);
    assert!(err.contains("([2],[1])") && err.contains("([1],[2])"), "{err}");
    assert!(!out.exists());
}

#[test]
fn malformed_specs_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("o.json");
    for (i, body) in [
        r#"{"dimension":1,"monomials":[{"alpha":[1],"beta":[1],"re":"1"}],"extra":1}"#,
        r#"{"dimension":1,"monomials":[{"alpha":[0],"beta":[0],"re":"1"},{"alpha":[1],"beta":[1],"re":"1"}]}"#,
        r#"{"dimension":1,"monomials":[{"alpha":[1],"beta":[1],"re":0.5}]}"#,
        r#"{"dimension":1,"monomials":[{"alpha":[1],"beta":[1],"re":"-1"}]}"#,
        "not json",
    ]
    .iter()
    .enumerate()
    {
        let spec = write(&dir, &format!("m{i}.json"), body);
        let run = bergman(&["coeffs", "--spec", s(&spec), "--order", "1", "--out", s(&out)]);
        assert_eq!(code(&run), 2, "case {i}: {}", String::from_utf8_lossy(&run.stderr));
    }
    assert_eq!(code(&bergman(&["coeffs", "--bogus"])), 2);
    assert!(!out.exists());
}

#[test]
fn short_series_exits_with_three() {
    let dir = TempDir::new().unwrap();
    let spec = write(&dir, "short.json", r#"{"dimension":1,"monomials":[{"alpha":[1],"beta":[1],"re":"1"}],"order":3}"#);
    let out = dir.path().join("o.json");
    let run = bergman(&["coeffs", "--spec", s(&spec), "--order", "2", "--cap", "4", "--out", s(&out)]);
    assert_eq!(code(&run), 3);
    assert!(String::from_utf8_lossy(&run.stderr).contains("need 20"));
}

#[test]
fn oracle_domain_failure_exits_with_four() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("v.json");
    let run = bergman(&["verify", "--model", "hyperbolic", "--k", "1,2", "--n-trunc", "0", "--x", "0.5:0", "--out", s(&out)]);
    assert_eq!(code(&run), 4);
    assert!(!out.exists());
}

#[test]
fn verify_writes_report_and_csv() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("v.json");
    let csv = dir.path().join("v.csv");
    let run = bergman(&["--csv", s(&csv), "verify", "--model", "quartic", "--k", "20,40,80", "--n-trunc", "0,1", "--out", s(&out)]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let r = read_json(&out);
    assert_eq!(r["pass"], true);
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n_trunc,k,remainder");
    assert_eq!(lines.len(), 7);
    let r0: f64 = lines[1].split(',').nth(2).unwrap().parse().unwrap();
    assert!((r0 - 9.62e-3).abs() < 1e-5, "{r0}");
}

#[test]
fn growth_reports_bounded_ratios() {
    let dir = TempDir::new().unwrap();
    let spec = write(&dir, "q.json", r#"{"dimension":1,"monomials":[{"alpha":[1],"beta":[1],"re":"1"},{"alpha":[2],"beta":[2],"re":"1"}]}"#);
    let out = dir.path().join("g.json");
    let run = bergman(&["growth", "--spec", s(&spec), "--m-max", "6", "--radius", "0.25", "--out", s(&out)]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let r = read_json(&out);
    let sup: Vec<f64> = r["growth"]["sup_norms"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert_eq!(&sup[..5], &[1.0, 4.25, 91.0, 2622.5, 86884.0]);
    assert_eq!(r["growth"]["bounded"], true);
    assert_eq!(r["optimal_truncation"][2]["n_star"], 5);
}

#[test]
fn repro_test_flags_constant_test_function() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("r.json");
    let run = bergman(&["repro-test", "--model", "quartic", "--k", "20,40,80", "--trunc", "0", "--out", s(&out)]);
    assert_eq!(code(&run), 0);
    let r = read_json(&out);
    let cases = r["cases"].as_array().unwrap();
    assert_eq!(cases.len(), 3);
    assert_eq!(cases[0]["pass"], false);
    assert_eq!(cases[1]["vanishing"], true);
    assert_eq!(cases[2]["vanishing"], true);
    assert_eq!(r["pass"], false);
}
