use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const RUN: &str = r#"{
  "problem": {"p": 2.0, "A": 1.0, "data": {"profile": "bump", "amplitude": 10.0, "rho": 1.0}},
  "grid": {"h": 0.03125, "t_max": 20.0}
}"#;

fn blowup(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_blowup"))
        .current_dir(dir)
        .env("BLOWUP_LOG", "warn")
        .args(args)
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) {
    fs::write(dir.join(name), text).unwrap();
}

#[test]
fn solve_then_diagnose_confirms_the_contradiction() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    write(dir, "run.json", RUN);
    let out = blowup(dir, &["solve", "--config", "run.json", "--output", "run"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["field.csv", "residual.json", "manifest.json"] {
        assert!(dir.join("run").join(f).exists(), "{f}");
    }
    let manifest: Value = serde_json::from_str(&fs::read_to_string(dir.join("run/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["status"], "blown_up");
    assert!(manifest["outputs"]["field.csv"].as_str().unwrap().len() == 64);

    let out = blowup(
        dir,
        &["diagnose", "--config", "run.json", "--field", "run/field.csv", "--output", "diag"],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let cert: Value = serde_json::from_str(&fs::read_to_string(dir.join("diag/certificate.json")).unwrap()).unwrap();
    assert!(cert["violation_found_at"].as_f64().unwrap() > 14.0);
    let diag: Value = serde_json::from_str(&fs::read_to_string(dir.join("diag/diagnostics.json")).unwrap()).unwrap();
    assert_eq!(diag["all_hold"], true);
    let residuals = fs::read_to_string(dir.join("diag/residuals.csv")).unwrap();
    assert!(residuals.starts_with("inequality_id,r,t,lhs,rhs,residual"));
}

#[test]
fn config_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    write(dir, "bad.json", "{\"problem\": {");
    assert_eq!(code(&blowup(dir, &["solve", "--config", "bad.json"])), 2);
    write(dir, "run.json", RUN);
    let out = blowup(dir, &["solve", "--config", "run.json", "--override", "grid.hh=1"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("hh"));
    let out = blowup(dir, &["solve", "--config", "run.json", "--override", "problem.p=1"]);
    assert_eq!(code(&out), 2);
    assert_eq!(code(&blowup(dir, &["solve", "--config", "missing.json"])), 2);
    let out = blowup(dir, &["diagnose", "--config", "run.json", "--field", "nothing.csv"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn truncated_field_file_is_a_parse_error() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    write(dir, "run.json", RUN);
    let overrides = ["--override", "grid.t_max=2", "--override", "grid.h=0.0625"];
    let mut args = vec!["solve", "--config", "run.json", "--output", "run"];
    args.extend(overrides);
    assert_eq!(code(&blowup(dir, &args)), 0);
    let text = fs::read_to_string(dir.join("run/field.csv")).unwrap();
    write(dir, "cut.csv", &text[..text.len() / 2]);
    let mut args = vec!["diagnose", "--config", "run.json", "--field", "cut.csv"];
    args.extend(overrides);
    assert_eq!(code(&blowup(dir, &args)), 2);
}

#[test]
fn short_window_exits_with_four() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    write(dir, "run.json", RUN);
    let out = blowup(dir, &["solve", "--config", "run.json", "--override", "grid.t_max=1", "--output", "s"]);
    assert_eq!(code(&out), 0);
    let out = blowup(dir, &["diagnose", "--config", "run.json", "--field", "s/field.csv", "--output", "d"]);
    assert_eq!(code(&out), 4, "{}", String::from_utf8_lossy(&out.stdout));
    // too short for the chain itself
    let out = blowup(dir, &["solve", "--config", "run.json", "--override", "grid.t_max=0.25", "--output", "t"]);
    assert_eq!(code(&out), 0);
    let out = blowup(dir, &["diagnose", "--config", "run.json", "--field", "t/field.csv", "--output", "e"]);
    assert_eq!(code(&out), 4);
}

#[test]
fn sweep_covers_zero_amplitude_and_resumes() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    write(
        dir,
        "sweep.json",
        r#"{"p_values": [2.0, 3.0], "amplitudes": [0.0, 10.0],
            "base": {"problem": {"p": 2.0, "A": 1.0, "data": {"profile": "bump", "amplitude": 1.0, "rho": 1.0}},
                     "grid": {"h": 0.0625, "t_max": 20.0}, "output_dir": "sw"}}"#,
    );
    assert_eq!(code(&blowup(dir, &["sweep", "--config", "sweep.json", "--jobs", "2"])), 0);
    let first = fs::read(dir.join("sw/sweep.csv")).unwrap();
    let text = String::from_utf8(first.clone()).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "p,amplitude,status,t_b,fitted_t_b,max_amplitude_reached,epsilon,s_margin");
    assert_eq!(lines.len(), 5);
    assert!(lines[1].contains(",0,complete,"));
    assert!(lines[2].contains("blown_up"));
    // p = 3 has no admissible eps
    assert!(lines[3].split(',').nth(6).unwrap().is_empty());

    // a corrupted row is recomputed, the others are reused
    let row = dir.join("sw/p2_a10/field.csv");
    let mut bytes = fs::read(&row).unwrap();
    let n = bytes.len();
    bytes[n - 2] ^= 1;
    fs::write(&row, bytes).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_blowup"))
        .current_dir(dir)
        .env("BLOWUP_LOG", "info")
        .args(["sweep", "--config", "sweep.json", "--jobs", "1"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    let log = String::from_utf8_lossy(&out.stderr);
    assert_eq!(log.matches("reusing").count(), 3, "{log}");
    assert_eq!(fs::read(dir.join("sw/sweep.csv")).unwrap(), first);
}

#[test]
fn gronwall_and_mean_subcommands() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    write(dir, "g.json", r#"{"C": 1.0, "a": 2.0, "b": 0.0, "t0": 0.0, "t1": 0.0, "J1": 1.0}"#);
    let out = blowup(dir, &["gronwall", "--config", "g.json"]);
    assert_eq!(code(&out), 0);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["r_star"].as_f64().unwrap() - 2.0).abs() < 1e-12);
    write(dir, "bad_g.json", r#"{"C": 1.0, "a": 0.5, "b": 0.0, "t0": 0.0, "t1": 0.0, "J1": 1.0}"#);
    assert_eq!(code(&blowup(dir, &["gronwall", "--config", "bad_g.json"])), 2);

    write(
        dir,
        "m.json",
        r#"{"field": {"kind": "offset-gaussian", "center": [0.5, 0.0, 0.0], "width": 0.4}, "radii": [0.0, 0.5, 1.0], "degree": 32}"#,
    );
    let out = blowup(dir, &["mean", "--config", "m.json"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut rows = text.lines();
    assert_eq!(rows.next(), Some("r,t,mean,exact"));
    for row in rows {
        let cols: Vec<f64> = row.split(',').map(|c| c.parse().unwrap()).collect();
        assert!((cols[2] - cols[3]).abs() < 1e-10, "{row}");
    }
}
