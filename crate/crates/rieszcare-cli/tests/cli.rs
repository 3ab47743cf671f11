use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name).to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rieszcare")).args(args).env("RIESZCARE_THREADS", "2").output().expect("binary runs")
}

fn ok_json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn error_record(out: &Output) -> Value {
    let line = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(line.lines().last().unwrap()).expect("stderr carries a JSON error")
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

fn tmp(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    dir.join(name)
}

#[test]
fn identity_care() {
    let v = ok_json(&["--command", "care-solve", "--input", &fixture("care_identity.json")]);
    assert!((f(&v["x"]["re"][0][0]) - 1.0).abs() < 1e-12);
    assert!(f(&v["residual"]) < 1e-10);
    assert_eq!(v["stabilizing"], Value::Bool(true));
    assert!(f(&v["sign_riesz_defect"]) < 1e-8);
}

#[test]
fn imaginary_eigenvalues_exit_two() {
    let out = run(&["--command", "care-solve", "--input", &fixture("imaginary.json")]);
    assert_eq!(out.status.code(), Some(2));
    let e = error_record(&out);
    assert_eq!(e["exit_code"], 2);
    assert!(e["stage"].is_string() && e["reason"].is_string());
    assert!(out.stdout.is_empty());
}

#[test]
fn input_errors_exit_one() {
    let out = run(&["--command", "care-solve", "--input", "/nonexistent/file.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_record(&out)["stage"], "read_input");
    let out = run(&["--command", "care-solve", "--input", &fixture("care_identity.json"), "--format", "csv"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["--command", "estimate", "--input", &fixture("one_pair.json"), "--eps-c", "-1"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_record(&out)["stage"], "config");
    let out = run(&["--command", "rpa-energy", "--input", &fixture("care_identity.json")]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["--command", "care-solve", "--bogus"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_record(&out)["stage"], "arguments");
}

#[test]
fn exported_care_matches_rpa_route() {
    let path = tmp("one_pair_care.json");
    let path = path.to_str().unwrap();
    let rpa = ok_json(&["--command", "rpa-energy", "--input", &fixture("one_pair.json"), "--export-care", path]);
    let care = ok_json(&["--command", "care-solve", "--input", path]);
    let (a, b) = (1.1f64, 0.2f64);
    let closed = 0.25 * ((a * a - b * b).sqrt() - a);
    assert!((f(&rpa["e_plasmon"]) - closed).abs() < 1e-12);
    assert!((f(&rpa["e_care"]) - closed).abs() < 1e-12);
    assert!((f(&care["x"]["re"][0][0]) - f(&rpa["amplitudes"]["re"][0][0])).abs() < 1e-12);
}

#[test]
fn decoupled_energy_is_zero() {
    let v = ok_json(&["--command", "rpa-energy", "--input", &fixture("decoupled.json")]);
    assert_eq!(f(&v["e_plasmon"]), 0.0);
    assert_eq!(f(&v["e_care"]), 0.0);
    let v = ok_json(&["--command", "estimate", "--input", &fixture("decoupled.json")]);
    assert_eq!(f(&v["energy"]), 0.0);
    assert!(v["trace"].is_null());
}

#[test]
fn rank_two_structure_audit() {
    let v = ok_json(&["--command", "rpa-energy", "--input", &fixture("h2_minimal.ints"), "--m", "2"]);
    assert_eq!(v["basis_size"], 5);
    assert_eq!(f(&v["structure"]["max_b_outside"]), 0.0);
    assert!(f(&v["structure"]["metric_defect"]) <= 1e-12);
    let m1 = ok_json(&["--command", "rpa-energy", "--input", &fixture("h2_minimal.ints")]);
    assert!(f(&m1["e_plasmon"]) < 0.0);
    assert!(f(&m1["route_difference"]) < 1e-8);
}

#[test]
fn quadrature_csv_shape() {
    let out = run(&["--command", "quadrature-study", "--input", &fixture("care_identity.json"), "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("m,eps_measured,eps_bound,eta,chi,m_gamma"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert!(rows.len() >= 3);
    for w in rows.windows(2) {
        assert!(w[1][0] > w[0][0] && w[1][2] <= w[0][2]);
    }
    for r in &rows {
        assert!(r[1] <= r[2]);
    }
}

#[test]
fn one_pair_estimate_and_replay() {
    let (p1, p2) = (tmp("est1.json"), tmp("est2.json"));
    for p in [&p1, &p2] {
        let out = run(&["--command", "estimate", "--input", &fixture("one_pair.json"), "--seed", "7", "--output", p.to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let (a, b) = (std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    assert_eq!(a, b);
    let v: Value = serde_json::from_slice(&a).unwrap();
    assert!(f(&v["abs_error"]) <= 0.01);
    assert_eq!(v["seed"], 7);
    assert!(v["trace"]["grover_queries"].as_u64().unwrap() > 0);
}

#[test]
fn estimate_sweep_csv() {
    let args = ["--command", "estimate", "--input", &fixture("one_pair.json"), "--format", "csv", "--seed", "3"];
    let out = run(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "eps,eps_c,queries,error,seed");
    assert_eq!(lines.len(), 5);
    let q: Vec<u64> = lines[1..].iter().map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert!(q[3] > q[0]);
    assert_eq!(run(&args).stdout, out.stdout);
}

#[test]
fn precondition_failure_exits_four() {
    let out = run(&["--command", "estimate", "--input", &fixture("h2_minimal.ints")]);
    assert_eq!(out.status.code(), Some(4));
    let e = error_record(&out);
    assert_eq!(e["stage"], "amplitude_estimate_trace");
}
