use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use amblab::signal::gaussian;
use amblab::{io, TimeGrid};
use num_complex::Complex64;
use serde_json::Value;
use tempfile::TempDir;

fn amblab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_amblab"))
        .args(args)
        .env("RUST_LOG", "off")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write_config(dir: &Path, objective: &str, extra: &str) -> String {
    let path = dir.join("run.json");
    let out = dir.join("out");
    let text = format!(
        r#"{{
  "grid": {{"n": 64, "dx": 0.125}},
  "objective": {objective},
  "optimizer": {{"max_iters": 150, "start": {{"variant": "Random"}}{extra}}},
  "outputs": {{"dir": "{}"}},
  "seed": 3
}}"#,
        out.display()
    );
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

const BALL_P2: &str = r#"{"kind": "AmbiguityLp", "p": 2.0, "domain": {"variant": "Ball", "center": {"x": 0.0, "omega": 0.0}, "r": 1.5}}"#;

#[test]
fn gaussian_ambiguity_origin_cell_is_energy() {
    let tmp = TempDir::new().unwrap();
    let grid = TimeGrid::new(128, 12.0 / 128.0).unwrap();
    let f = gaussian(grid, 1.3).scaled(Complex64::new(2.0, 0.0));
    let sig = tmp.path().join("f.csv");
    io::write_signal(&sig, &f).unwrap();
    let out = tmp.path().join("a.csv");
    let res = amblab(&["ambiguity", sig.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&res), 0, "{}", stderr(&res));
    let a = io::read_tfarray(&out).unwrap();
    let (k, l) = a.origin_index();
    assert!((a.get(k, l).norm() - f.norm_sq()).abs() < 1e-10);
    assert!(tmp.path().join("manifest.json").exists());
}

#[test]
fn malformed_csv_reports_line_number() {
    let tmp = TempDir::new().unwrap();
    let grid = TimeGrid::new(8, 0.5).unwrap();
    let sig = tmp.path().join("bad.csv");
    io::write_signal(&sig, &gaussian(grid, 1.0)).unwrap();
    let mut lines: Vec<String> = fs::read_to_string(&sig).unwrap().lines().map(String::from).collect();
    lines[4] = "-1.0,oops,0".to_string();
    fs::write(&sig, lines.join("\n") + "\n").unwrap();
    let res = amblab(&["ambiguity", sig.to_str().unwrap(), "--out", tmp.path().join("a.csv").to_str().unwrap()]);
    assert_eq!(code(&res), 3);
    assert!(stderr(&res).contains(":5"), "{}", stderr(&res));
}

#[test]
fn sidecar_mismatch_is_a_schema_error() {
    let tmp = TempDir::new().unwrap();
    let sig = tmp.path().join("f.csv");
    io::write_signal(&sig, &gaussian(TimeGrid::new(16, 0.5).unwrap(), 1.0)).unwrap();
    io::write_sidecar(&sig, &TimeGrid::new(32, 0.5).unwrap()).unwrap();
    let res = amblab(&["ambiguity", sig.to_str().unwrap(), "--out", tmp.path().join("a.csv").to_str().unwrap()]);
    assert_eq!(code(&res), 3, "{}", stderr(&res));
}

#[test]
fn missing_input_is_an_io_error() {
    let res = amblab(&["ambiguity", "/nonexistent/f.csv", "--out", "/tmp/never.csv"]);
    assert_eq!(code(&res), 2);
}

#[test]
fn optimize_writes_monotone_reproducible_report() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), BALL_P2, "");
    let first = amblab(&["optimize", "--config", &cfg, "--quiet"]);
    assert_eq!(code(&first), 0, "{}", stderr(&first));
    let out = tmp.path().join("out");
    let report_a = fs::read_to_string(out.join("report.json")).unwrap();
    let signal_a = fs::read(out.join("final_signal.csv")).unwrap();
    let v: Value = serde_json::from_str(&report_a).unwrap();
    let trace: Vec<f64> = v["objective_trace"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect();
    assert!(!trace.is_empty());
    assert!(trace.windows(2).all(|w| w[1] >= w[0] - 1e-12));
    assert_eq!(v["seed"], 3);
    assert!(out.join("manifest.json").exists());

    let second = amblab(&["optimize", "--config", &cfg, "--quiet"]);
    assert_eq!(code(&second), 0);
    assert_eq!(report_a, fs::read_to_string(out.join("report.json")).unwrap());
    assert_eq!(signal_a, fs::read(out.join("final_signal.csv")).unwrap());
}

#[test]
fn unknown_objective_tag_is_a_schema_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), r#"{"kind": "Bogus", "p": 2.0}"#, "");
    let res = amblab(&["optimize", "--config", &cfg]);
    assert_eq!(code(&res), 3, "{}", stderr(&res));
}

#[test]
fn invalid_optimizer_config_is_a_schema_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), BALL_P2, r#", "step0": -1.0"#);
    let res = amblab(&["optimize", "--config", &cfg]);
    assert_eq!(code(&res), 3, "{}", stderr(&res));
}

#[test]
fn scan_writes_baseline() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), BALL_P2, "");
    let res = amblab(&["scan", "--config", &cfg]);
    assert_eq!(code(&res), 0, "{}", stderr(&res));
    let v: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("out/scan.json")).unwrap()).unwrap();
    assert!(v["best_objective"].as_f64().unwrap() > 0.0);
}

#[test]
fn verify_single_suite() {
    let res = amblab(&["verify", "radar_correlation", "--seed", "7"]);
    assert_eq!(code(&res), 0, "{}", stderr(&res));
    let v: Value = serde_json::from_slice(&res.stdout).unwrap();
    let arr = v.as_array().unwrap();
    assert_eq!(arr.len(), 1);
    assert_eq!(arr[0]["name"], "radar_correlation");
    assert_eq!(arr[0]["passed"], true);
}

#[test]
fn verify_unknown_suite() {
    let res = amblab(&["verify", "nosuchsuite"]);
    assert_eq!(code(&res), 3);
    assert!(stderr(&res).contains("nosuchsuite"));
}

#[test]
fn verify_all_is_byte_identical_across_runs() {
    let tmp = TempDir::new().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        let res = amblab(&["verify", "all", "--seed", "7", "--out", dir.to_str().unwrap(), "--quiet"]);
        assert_eq!(code(&res), 0, "{}", stderr(&res));
    }
    let ra = fs::read(a.join("verify_report.json")).unwrap();
    let rb = fs::read(b.join("verify_report.json")).unwrap();
    assert_eq!(ra, rb);
    let v: Value = serde_json::from_slice(&ra).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 11);
}

#[test]
fn timecorr_of_interval_indicator() {
    let tmp = TempDir::new().unwrap();
    let grid = TimeGrid::new(1024, 1.0 / 32.0).unwrap();
    let sig = tmp.path().join("chi.csv");
    io::write_signal(&sig, &amblab::signal::indicator(grid, -2.0, 2.0)).unwrap();
    let res = amblab(&["timecorr", sig.to_str().unwrap(), "--support", "0", "1", "--p", "1"]);
    assert_eq!(code(&res), 0, "{}", stderr(&res));
    let v: Value = serde_json::from_slice(&res.stdout).unwrap();
    let value = v["value"].as_f64().unwrap();
    assert!((value - 0.875).abs() < 2.0 / 32.0, "{value}");
}
