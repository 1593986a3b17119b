//! Runs the whole verification suite through the binary and reports one
//! line per criterion.

use std::process::Command;
use std::time::Instant;

use serde_json::Value;

const SUITE_LIMIT_SECONDS: f64 = 300.0;

fn line(c: &Value) -> String {
    let verdict = if c["pass"].as_bool() == Some(true) { "PASS" } else { "FAIL" };
    let mut s = format!(
        "criterion {:>2} {verdict} {} [{:.2}s]",
        c["id"],
        c["title"].as_str().unwrap_or(""),
        c["seconds"].as_f64().unwrap_or(f64::NAN)
    );
    for m in c["measurements"].as_array().into_iter().flatten() {
        if m["pass"].as_bool() != Some(true) {
            s.push_str(&format!(" :: {} = {} (tol {})", m["name"].as_str().unwrap_or(""), m["value"], m["tolerance"]));
        }
    }
    if let Some(e) = c["error"].as_str() {
        s.push_str(&format!(" :: error {e}"));
    }
    for f in c["flagged"].as_array().into_iter().flatten() {
        s.push_str(&format!(" :: flagged {}", f.as_str().unwrap_or("")));
    }
    s
}

#[test]
fn acceptance() {
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_projfinsler")).arg("verify-all").output().expect("binary runs");
    let wall = start.elapsed().as_secs_f64();
    let summary: Value = serde_json::from_slice(&out.stdout)
        .unwrap_or_else(|e| panic!("{e}; stderr: {}", String::from_utf8_lossy(&out.stderr)));
    let criteria = summary["criteria"].as_array().expect("criteria list");

    let ids: Vec<u64> = criteria.iter().map(|c| c["id"].as_u64().unwrap()).collect();
    assert_eq!(ids, (1..=12).collect::<Vec<_>>());
    for c in criteria {
        println!("{}", line(c));
    }
    println!("verify-all wall time {wall:.1}s, exit {:?}", out.status.code());

    let failed: Vec<u64> = criteria.iter().filter(|c| c["pass"].as_bool() != Some(true)).map(|c| c["id"].as_u64().unwrap()).collect();
    assert_eq!(summary["pass"].as_bool(), Some(failed.is_empty()));
    assert_eq!(out.status.code(), Some(if failed.is_empty() { 0 } else { 1 }));
    assert!(wall < SUITE_LIMIT_SECONDS, "suite took {wall}s");
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
