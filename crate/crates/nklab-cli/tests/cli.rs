// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::process::{Command, Output};

fn nklab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nklab")).args(args).env_remove("NKLAB_SEED").output().expect("run nklab")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("JSON report on stdout")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("nklab-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn structure_passes_and_reports_every_sample_count() {
    let out = nklab(&["verify", "structure", "--samples", "1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    let records = v["records"].as_array().unwrap();
    assert!(!records.is_empty());
    for r in records {
        assert!(r["samples"].as_u64().unwrap() >= 1);
        assert!(r["tolerance"].as_f64().unwrap() > 0.0);
    }
    let summary = &v["summary"];
    assert_eq!(summary["total"].as_u64().unwrap() as usize, records.len());
    assert_eq!(summary["failed"], 0);
    assert_eq!(v["config"]["samples"], 1);
}

#[test]
fn csv_header_is_fixed() {
    let out = nklab(&["verify", "isometries", "--samples", "2", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("suite,check,samples,max_residual,tolerance,expected,observed,pass"));
    assert!(lines.all(|l| l.ends_with(",true")));
}

#[test]
fn reports_are_byte_identical_across_runs_and_schedulers() {
    let args = ["catalog", "--id", "torus", "--samples", "3"];
    let a = nklab(&args);
    let b = nklab(&args);
    let mut seq = args.to_vec();
    seq.push("--sequential");
    let c = nklab(&seq);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
}

#[test]
fn seed_changes_samples_and_env_is_honored() {
    let base = nklab(&["verify", "structure", "--samples", "5"]);
    let other = nklab(&["verify", "structure", "--samples", "5", "--seed", "7"]);
    assert_ne!(base.stdout, other.stdout);
    let env = Command::new(env!("CARGO_BIN_EXE_nklab"))
        .args(["verify", "structure", "--samples", "5"])
        .env("NKLAB_SEED", "7")
        .output()
        .unwrap();
    assert_eq!(env.stdout, other.stdout);
    assert_eq!(json(&env)["config"]["seed"], 7);
}

#[test]
fn impossible_tolerance_fails_the_run() {
    let out = nklab(&["verify", "structure", "--samples", "4", "--tol-exact", "1e-30"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(json(&out)["summary"]["failed"].as_u64().unwrap() > 0);
}

#[test]
fn unknown_row_and_bad_config_are_errors() {
    assert_eq!(nklab(&["catalog", "--id", "sphere"]).status.code(), Some(2));
    assert_eq!(nklab(&["verify", "structure", "--samples", "0"]).status.code(), Some(2));
    assert_eq!(nklab(&["verify", "structure", "--tol-fd", "-1"]).status.code(), Some(2));
}

#[test]
fn unwritable_output_is_an_error() {
    let dir = scratch("blocked");
    std::fs::create_dir_all(&dir).unwrap();
    let out = nklab(&["verify", "structure", "--samples", "1", "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn out_file_matches_stdout() {
    let path = scratch("psl.json");
    let args = ["catalog", "--id", "psl", "--samples", "2"];
    let to_file = nklab(&[&args[..], &["--out", path.to_str().unwrap()]].concat());
    assert!(to_file.status.success());
    assert!(to_file.stdout.is_empty());
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
    let k = v["records"].as_array().unwrap().iter().find(|r| r["check"] == "psl sectional curvature").unwrap();
    assert_eq!(k["expected"].as_f64(), Some(-0.375));
    assert!((k["observed"].as_f64().unwrap() + 0.375).abs() < 1e-5);
}

#[test]
fn lambda_flag_selects_the_row_constants() {
    let out = nklab(&["catalog", "--id", "f_lambda", "--lambda", "2", "--samples", "1"]);
    let v = json(&out);
    let recs = v["records"].as_array().unwrap();
    let w = recs.iter().find(|r| r["check"] == "f_lambda(lambda=2) w33^2").unwrap();
    let want = (2.0f64 / 3.0).sqrt() * (1.0 - 2.0);
    assert!((w["expected"].as_f64().unwrap() - want).abs() < 1e-15);
    assert!(recs.iter().all(|r| !r["check"].as_str().unwrap().contains("lambda=3")));
    assert_eq!(out.status.success(), recs.iter().all(|r| r["pass"] == true));
}

#[test]
fn totally_geodesic_rows_pass() {
    let out = nklab(&["catalog", "--samples", "2", "--id", "berger_timelike"]);
    assert!(out.status.success());
    let v = json(&out);
    let tg = v["records"].as_array().unwrap().iter().find(|r| r["check"] == "berger_timelike totally geodesic").unwrap();
    assert_eq!(tg["pass"], true);
}
