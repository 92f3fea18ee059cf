use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn riemlab(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_riemlab")).args(args).current_dir(cwd).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

const SPHERE: &str = r#"{"id": "sphere", "family": {"name": "sphere-stereographic"},
    "chart": {"kind": "point", "point": [0, 0, 0], "h": 0.01},
    "law": {"kind": "riemann-flow"}, "integrator": {"dt": 0.01, "t_end": 2.0, "stride": 5}}"#;

const FLAT: &str = r#"{"id": "flat", "family": {"name": "flat"},
    "chart": {"kind": "grid", "dim": 3, "points": 8},
    "law": {"kind": "ricci-flow"}, "integrator": {"dt": 0.25, "t_end": 0.5, "stride": 1}}"#;

#[test]
fn exit_codes_follow_the_outcome() {
    let dir = tempfile::tempdir().unwrap();
    let sphere = write(dir.path(), "sphere.json", SPHERE);
    let flat = write(dir.path(), "flat.json", FLAT);
    let bad = write(dir.path(), "bad.json", &FLAT.replace("0.25", "-0.25"));

    assert_eq!(riemlab(&["run", &flat, "--out", "o"], dir.path()).status.code(), Some(0));
    assert_eq!(riemlab(&["run", &sphere, "--out", "o"], dir.path()).status.code(), Some(2));
    let out = riemlab(&["run", &bad, "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("integrator.dt"));
    // the worst outcome in a batch decides
    assert_eq!(riemlab(&["run", &flat, &sphere, "--out", "o"], dir.path()).status.code(), Some(2));
    assert_eq!(riemlab(&["run", &flat, &bad, &sphere, "--out", "o"], dir.path()).status.code(), Some(1));
}

#[test]
fn run_writes_series_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let sphere = write(dir.path(), "sphere.json", SPHERE);
    riemlab(&["run", &sphere, "--out", "o"], dir.path());
    let summary: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("o/sphere.summary.json")).unwrap()).unwrap();
    for key in ["id", "outcome", "termination", "t_final", "T_est", "blowup_exponent", "residuals", "discrepancies", "config"] {
        assert!(summary.get(key).is_some(), "missing {key}");
    }
    assert_eq!(summary["outcome"], "singular");
    assert_eq!(summary["termination"], "collapse");
    let t_est = summary["T_est"].as_f64().unwrap();
    assert!((t_est - 1.0).abs() < 1e-3, "{t_est}");

    let mut csv = csv::Reader::from_path(dir.path().join("o/sphere.csv")).unwrap();
    let header = csv.headers().unwrap().clone();
    assert_eq!(&header[0], "t");
    let rows = csv.records().count();
    assert!(rows > 10, "{rows}");
}

#[test]
fn one_shot_reports_print_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = riemlab(&["curvature", "--family", "sphere-stereographic", "--point", "0.1,-0.2,0.3"], dir.path());
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let k = v["sectional_01"].as_f64().unwrap();
    assert!((k - 1.0).abs() < 1e-6, "{k}");

    let out = riemlab(&["identity-check", "--dim", "4", "--samples", "5", "--seed", "3"], dir.path());
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["failures"], 0);
    assert!(v["max_recovery_error"].as_f64().unwrap() < 1e-10);
}

#[test]
fn unknown_family_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = riemlab(&["curvature", "--family", "klein-bottle"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("klein-bottle"));
}
