use std::path::{Path, PathBuf};
use std::process::Command;

use flat5::cli::{run_analyze, run_demo, run_parametrize, run_verify, AnalysisOptions, GridOptions};
use serde_json::Value;

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn json(text: &str) -> Value {
    serde_json::from_str(text).unwrap()
}

const NF1: &str = r#"{"schema": "flat5/1", "variant": "NF1", "z0": [0, 0, 0, 0, 0], "v0": [1, 0]}"#;
const NF2: &str = r#"{"schema": "flat5/1", "variant": "NF2", "nonlinearities": {"a1": "z1*z5 + z3^2"},
    "z0": [0.1, 0, 0, 0, 0.2], "v0": [1, 0]}"#;
const NF3: &str = r#"{"schema": "flat5/1", "variant": "NF3", "z0": [0, 0, 0, 0, 0], "v0": [1, 0]}"#;
const CUBIC: &str = r#"{"schema": "flat5/1", "phi1": [0, 1], "phi2": [0, 0, 0, 1]}"#;

#[test]
fn analyze_linear_form_reports_indices() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_analyze(&write(dir.path(), "nf1.json", NF1), None, &AnalysisOptions::default());
    assert_eq!(out.code, 0, "{}", out.stderr);
    let doc = json(&out.stdout);
    assert_eq!(doc["linearizable"], true);
    assert_eq!(doc["brunovsky_indices"], json("[1, 4]"));
    assert_eq!(doc["ddiff"]["p"], 0);
    assert_eq!(doc["first_noninvolutive"], Value::Null);
}

#[test]
fn analyze_nf2_needs_one_prolongation() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_analyze(&write(dir.path(), "nf2.json", NF2), None, &AnalysisOptions::default());
    assert_eq!(out.code, 0, "{}", out.stderr);
    let doc = json(&out.stdout);
    assert_eq!(doc["linearizable"], false);
    assert_eq!(doc["first_noninvolutive"], 0);
    assert_eq!(doc["ddiff"]["p"], 1);
    assert_eq!(doc["ddiff"]["failures"][0]["ranks"], json("[2, 4, 5]"));
}

#[test]
fn analyze_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "nf2.json", NF2);
    let a = run_analyze(&path, None, &AnalysisOptions::default());
    let b = run_analyze(&path, None, &AnalysisOptions::default());
    assert_eq!(a, b);
}

#[test]
fn analyze_system_document_with_feedback() {
    let dir = tempfile::tempdir().unwrap();
    let sys = write(
        dir.path(),
        "sys.json",
        r#"{"schema": "flat5/1", "state": ["a", "b", "c", "d", "e"],
            "f": ["0", "c", "d", "e", "0"], "g1": ["1", "0", "0", "0", "0"], "g2": ["0", "0", "0", "0", "1"],
            "base_point": [0, 0, 0, 0, 0]}"#,
    );
    let fb = write(
        dir.path(),
        "fb.json",
        r#"{"schema": "flat5/1", "alpha": ["0", "a*b"], "beta": [["2", "0"], ["0", "1"]]}"#,
    );
    let out = run_analyze(&sys, Some(&fb), &AnalysisOptions::default());
    assert_eq!(out.code, 0, "{}", out.stderr);
    let doc = json(&out.stdout);
    assert_eq!(doc["ddiff"]["p"], 0);
    assert_eq!(doc["regularity"]["feedback_determinant"], 2.0);
}

#[test]
fn malformed_documents_fail_with_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let opts = AnalysisOptions::default();
    for (name, text) in [
        ("broken.json", "{\"schema\": "),
        ("extra.json", r#"{"schema": "flat5/1", "variant": "NF1", "z0": [0,0,0,0,0], "v0": [1,0], "x": 1}"#),
        ("syntax.json", r#"{"schema": "flat5/1", "variant": "NF2", "nonlinearities": {"a1": "z1*"}, "z0": [0,0,0,0,0], "v0": [1,0]}"#),
        ("unknown.json", r#"{"schema": "flat5/1", "variant": "NF2", "nonlinearities": {"a1": "q"}, "z0": [0,0,0,0,0], "v0": [1,0]}"#),
    ] {
        let out = run_analyze(&write(dir.path(), name, text), None, &opts);
        assert_eq!(out.code, 1, "{name}");
        assert!(json(&out.stdout)["error"]["kind"].is_string(), "{name}");
    }
    let out = run_analyze(&dir.path().join("missing.json"), None, &opts);
    assert_eq!(out.code, 1);
}

#[test]
fn parametrize_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let form = write(dir.path(), "nf3.json", NF3);
    let curve = write(dir.path(), "curve.json", CUBIC);
    let csv = dir.path().join("traj.csv");
    let grid = GridOptions { dt: 0.01, ..GridOptions::default() };
    let out = run_parametrize(&form, &curve, &grid, Some(&csv));
    assert_eq!(out.code, 0, "{}", out.stdout);
    let summary = json(&out.stdout);
    assert_eq!(summary["differential_weight"], 9);
    assert_eq!(summary["nodes"], 101);

    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,z1,z2,z3,z4,z5,v1,v2,margin");
    let last: Vec<f64> = lines.last().unwrap().split(',').map(|s| s.parse().unwrap()).collect();
    let expected = [1.0, 1.0, 1.0, 3.0, 6.0, 6.0, 1.0, 0.0, 1.0];
    for (a, b) in last.iter().zip(expected) {
        assert!((a - b).abs() < 1e-9, "{last:?}");
    }

    let to_stdout = run_parametrize(&form, &curve, &grid, None);
    assert_eq!(to_stdout.stdout, text);
}

#[test]
fn singular_curve_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let form = write(
        dir.path(),
        "nf13.json",
        r#"{"schema": "flat5/1", "variant": "NF13", "z0": [0, 0, 0, 0, 0], "v0": [1, 0], "vdot0": [0, 0]}"#,
    );
    let curve = write(dir.path(), "line.json", r#"{"schema": "flat5/1", "phi1": [0, 1], "phi2": [0, 0, 1]}"#);
    let out = run_parametrize(&form, &curve, &GridOptions { dt: 0.1, ..GridOptions::default() }, None);
    assert_eq!(out.code, 3);
    let err = &json(&out.stdout)["error"];
    assert_eq!(err["kind"], "singular_node");
    assert_eq!(err["node"], 0);
}

#[test]
fn verify_reports_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let form = write(dir.path(), "nf3.json", NF3);
    let curve = write(dir.path(), "curve.json", CUBIC);
    let grid = GridOptions { dt: 1e-3, ..GridOptions::default() };
    let out = run_verify(&form, &curve, &grid, &AnalysisOptions::default());
    assert_eq!(out.code, 0, "{}", out.stdout);
    let doc = json(&out.stdout);
    assert!(doc["roundtrip_error"].as_f64().unwrap() < 1e-6);
    assert_eq!(doc["measured_differential_weight"], doc["expected_differential_weight"]);
    assert_eq!(doc["ddiff"]["p"], doc["expected_ddiff"]);
}

#[test]
fn demos_reduce_to_their_forms() {
    for (name, target, p) in [("motor", "NF'6", 1), ("car", "NF''9", 3)] {
        let out = run_demo(name, &AnalysisOptions::default());
        assert_eq!(out.code, 0, "{}", out.stdout);
        let doc = json(&out.stdout);
        assert_eq!(doc["target"], target);
        assert!(doc["reduction_residual"].as_f64().unwrap() <= 1e-9);
        assert_eq!(doc["flat_output_pulls_back"], true);
        assert_eq!(doc["analysis"]["ddiff"]["p"], p);
    }
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_flat5");
    let ok = Command::new(bin).arg("analyze").arg(write(dir.path(), "nf1.json", NF1)).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    assert_eq!(json(&String::from_utf8(ok.stdout).unwrap())["brunovsky_indices"], json("[1, 4]"));

    let bad = Command::new(bin).arg("analyze").arg(write(dir.path(), "bad.json", "[")).output().unwrap();
    assert_eq!(bad.status.code(), Some(1));

    let usage = Command::new(bin).arg("frobnicate").output().unwrap();
    assert_eq!(usage.status.code(), Some(2));
    let demo = Command::new(bin).args(["demo", "boat"]).output().unwrap();
    assert_eq!(demo.status.code(), Some(2));
}
