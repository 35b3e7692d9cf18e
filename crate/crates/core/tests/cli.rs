//! Exit codes and output formats of the `hypercert` binary.

use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hypercert"))
        .args(args)
        .output()
        .expect("spawn hypercert")
}

fn code(args: &[&str]) -> i32 {
    run(args).status.code().expect("exit code")
}

#[test]
fn exit_codes() {
    assert_eq!(code(&["certify", "--system", "doubling", "--rate", "0.6", "--depth", "8"]), 0);
    assert_eq!(code(&["certify", "--system", "intermittent", "--rate", "0.1", "--nmax", "4", "--depth", "8"]), 2);
    assert_eq!(code(&["falsify", "--system", "intermittent", "--period-max", "3"]), 0);
    assert_eq!(code(&["falsify", "--system", "doubling", "--period-max", "6"]), 3);
    assert_eq!(code(&["certify", "--system", "no-such-map", "--rate", "0.6"]), 1);
    assert_eq!(code(&["certify", "--system", "doubling"]), 1);
    assert_eq!(code(&["certify", "--system", "doubling", "--rate", "-1"]), 1);
    assert_eq!(code(&["verify", "--cert", "/nonexistent/cert.json"]), 1);
    assert_eq!(code(&["gallery"]), 0);
}

#[test]
fn certify_then_verify() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cert.json");
    let p = path.to_str().unwrap();
    assert_eq!(code(&["certify", "--system", "perturbed-doubling", "--param", "a=0.05", "--rate", "0.4", "--depth", "12", "--out", p]), 0);
    let out = run(&["verify", "--cert", p, "--samples", "200", "--nmax", "30"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["min_ratio"].is_string() || v["min_ratio"].is_number());
}

#[test]
fn outputs_are_deterministic() {
    for args in [
        &["certify", "--system", "perturbed-doubling", "--rate", "0.4", "--depth", "12"][..],
        &["certify", "--system", "intermittent", "--rate", "0.1", "--nmax", "4", "--depth", "8"][..],
        &["falsify", "--system", "period2-cocycle", "--period-max", "2"][..],
        &["lyapunov", "--system", "cat", "--orbits", "4", "--length", "200", "--seed", "3"][..],
    ] {
        let a = run(args);
        let b = run(args);
        assert_eq!(a.status.code(), b.status.code(), "{args:?}");
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn lyapunov_csv_shape() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    let out = run(&[
        "lyapunov", "--system", "perturbed-cat", "--orbits", "3", "--length", "500", "--samples", "37", "--csv",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,average,exponent"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|f| f.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 37);
    assert!(rows.iter().all(|r| r.len() == 3));
    assert_eq!(rows.last().unwrap()[0], 500.0);
}
