use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_projfinsler"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

#[test]
fn funk_interval_prints_ln2() {
    let out = run(&["funk", "--interval", "--a", "0", "--b", "0.5", "--k", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let v: f64 = String::from_utf8_lossy(&out.stdout).trim().parse().unwrap();
    assert!((v - 2f64.ln()).abs() < 1e-15);
}

#[test]
fn funk_ball_distances() {
    let out = run(&["funk", "--ball", "--x", "0,0", "--to", "0.5,0"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!((v["distance"].as_f64().unwrap() - 2f64.ln()).abs() < 1e-15);
    assert!((v["reverse_distance"].as_f64().unwrap() - 1.5f64.ln()).abs() < 1e-15);
}

#[test]
fn klein_ricci_bound() {
    let out = run(&["curvature", "--metric", "klein", "--n", "2", "--check-bound", "--c", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["pass"], Value::Bool(true));
    assert!(v["max_eigenvalue"].as_f64().unwrap().abs() < 1e-8);
}

#[test]
fn failed_bound_is_nonzero() {
    let out = run(&["curvature", "--metric", "euclidean", "--n", "2", "--check-bound", "--c", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["pass"], Value::Bool(false));
}

#[test]
fn theorem_checkers_exit_two() {
    let out = run(&[
        "pseudodist", "--metric", "klein", "--n", "2", "--x", "0,0", "--y", "0.5,0", "--c", "1",
        "--schwarz-grid=-0.9,-0.5,0,0.5,0.9",
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["flagged"], Value::Bool(true));
    assert_eq!(v["schwarz"]["pass"], Value::Bool(false));
    assert_eq!(v["corollary"]["pass"], Value::Bool(false));
    assert_eq!(v["corollary"]["pass_alternate"], Value::Bool(true));
    let h: Vec<f64> = v["schwarz"]["h"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    for (u, h) in [-0.9, -0.5, 0.0, 0.5, 0.9].iter().zip(h) {
        assert!((h - 1.0 / (1.0 + u)).abs() < 1e-6);
    }
}

#[test]
fn pseudodist_without_checkers_exits_zero() {
    let out = run(&["pseudodist", "--metric", "klein", "--n", "2", "--x", "0,0", "--y", "0.5,0"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!((v["report"]["base_chart_value"].as_f64().unwrap() - 2f64.ln()).abs() < 1e-8);
}

#[test]
fn errors_are_single_json_lines() {
    for args in [
        &["geodesic", "--metric", "klein", "--n", "2", "--x", "2,0", "--y", "1,0"][..],
        &["nonsense"][..],
        &["funk", "--interval", "--a", "0"][..],
        &["geodesic", "--metric", "klein", "--x", "0,0", "--y", "1,0"][..],
    ] {
        let out = run(args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        let err = String::from_utf8_lossy(&out.stderr);
        let lines: Vec<&str> = err.lines().collect();
        assert_eq!(lines.len(), 1, "{err}");
        let v: Value = serde_json::from_str(lines[0]).unwrap();
        assert!(v["error"].is_string() && v["message"].is_string());
    }
    let out = run(&["geodesic", "--metric", "klein", "--n", "2", "--x", "2,0", "--y", "1,0"]);
    let v: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(v["error"], "domain");
}

#[test]
fn malformed_config_reports_position() {
    let dir = tempdir();
    let path = dir.join("bad.json");
    std::fs::write(&path, "{\n  \"metric\": {\"kind\": \"klein\", \"n\": 2},\n  \"command\": {\"name\": \"curvature\", \"colour\": 1}\n}\n").unwrap();
    let out = run(&["run", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(v["error"], "usage");
    assert_eq!(v["field"], "command");
    assert!(matches!(v["line"].as_u64(), Some(3..=4)));
    assert!(v["message"].as_str().unwrap().contains("colour"));

    std::fs::write(&path, r#"{"metric": {"kind": "hyperbolic-plane"}, "command": {"name": "validate"}}"#).unwrap();
    let out = run(&["run", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(v["field"], "metric.kind");
    assert!(v["message"].as_str().unwrap().contains("hyperbolic-plane"));
}

fn tempdir() -> std::path::PathBuf {
    let d = std::env::temp_dir().join(format!("projfinsler-cli-{}-{:?}", std::process::id(), std::thread::current().id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}

#[test]
fn config_matches_flags_and_is_deterministic() {
    let dir = tempdir();
    let path = dir.join("validate.json");
    std::fs::write(
        &path,
        r#"{"metric": {"kind": "funk-ball", "n": 3, "k": 2.0}, "command": {"name": "validate", "samples": 24}, "seed": 7}"#,
    )
    .unwrap();
    let a = run(&["run", "--config", path.to_str().unwrap()]);
    let b = run(&["--seed", "7", "validate", "--metric", "funk-ball", "--n", "3", "--metric-k", "2", "--samples", "24"]);
    let c = bin()
        .env("PROJFINSLER_THREADS", "1")
        .args(["run", "--config", path.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
    let other_seed = run(&["--seed", "8", "validate", "--metric", "funk-ball", "--n", "3", "--metric-k", "2", "--samples", "24"]);
    assert_ne!(a.stdout, other_seed.stdout);
}

#[test]
fn geodesic_csv_trace() {
    let dir = tempdir();
    let csv = dir.join("trace.csv");
    let out = run(&[
        "geodesic", "--metric", "klein", "--n", "2", "--x", "0,0", "--to", "0.5,0", "--points", "11", "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!((v["length"].as_f64().unwrap() - 0.5f64.atanh()).abs() < 1e-9);
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("s,x0,x1,v0,v1"));
    let last: Vec<f64> = lines.last().unwrap().split(',').map(|t| t.parse().unwrap()).collect();
    assert!((last[1] - 0.5).abs() < 1e-9);
    assert_eq!(text.lines().count(), 12);
}

#[test]
fn projparam_table() {
    let out = run(&["projparam", "--metric", "klein", "--n", "2", "--x", "0,0", "--y", "1,0", "--points", "9"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, ["s", "x0", "x1", "q", "w1", "w1_prime", "w2", "w2_prime", "pi"]);
    for rec in rdr.records() {
        let r: Vec<f64> = rec.unwrap().iter().map(|t| t.parse().unwrap()).collect();
        // Klein: π = tanh s and q = −2
        assert!((r[8] - r[0].tanh()).abs() < 1e-7, "{r:?}");
        assert!((r[3] + 2.0).abs() < 1e-6, "{r:?}");
    }
}
