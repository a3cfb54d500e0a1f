use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ndarray::array;
use pla_core::simulate::{draw_sample, PopulationModel, Scenario};
use pla_core::{DispersionKind, DispersionMatrix};
use serde_json::Value;
use tempfile::TempDir;

fn pla(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pla"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn stderr_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).expect("stderr is JSON")
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

/// 2000 draws from the three-variable example population.
fn example_data(dir: &Path, x3_variance: f64) -> PathBuf {
    let cov = array![[2.0, 0.5, 0.0], [0.5, 2.0, 0.0], [0.0, 0.0, x3_variance]];
    let pop = PopulationModel::new(
        DispersionMatrix::new(cov, DispersionKind::Covariance, None).unwrap(),
        vec![2],
        Scenario::SingleVars { k: 1 },
    );
    let data = draw_sample(&pop, 2000, 5).unwrap();
    let p = dir.join("data.csv");
    data.write_csv(&p).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn analyze_finds_two_blocks() {
    let dir = TempDir::new().unwrap();
    let data = example_data(dir.path(), 5.0);
    let r = stdout_json(&pla(&[
        "analyze",
        "--input",
        s(&data),
        "--tau",
        "0.7",
        "--ev-cutoff",
        "0.1",
    ]));
    let blocks = r["blocks"].as_array().unwrap();
    assert_eq!(blocks.len(), 2);
    let mut shares: Vec<(String, f64)> = blocks
        .iter()
        .map(|b| (b["variables"].to_string(), b["ev_exact"].as_f64().unwrap()))
        .collect();
    shares.sort_by(|a, b| a.0.cmp(&b.0));
    assert_eq!(shares[0].0, r#"["X1","X2"]"#);
    assert_eq!(shares[1].0, r#"["X3"]"#);
    assert!((shares[0].1 - 4.0 / 9.0).abs() < 0.04);
    assert!((shares[1].1 - 5.0 / 9.0).abs() < 0.04);
    assert_eq!(r["recommendation"].as_array().unwrap().len(), 0);
}

#[test]
fn analyze_covariance_matrix_is_exact() {
    let dir = TempDir::new().unwrap();
    let cov = write(dir.path(), "cov.csv", "2,0.5,0\n0.5,2,0\n0,0,5\n");
    let r = stdout_json(&pla(&[
        "analyze",
        "--covariance",
        s(&cov),
        "--mode",
        "covariance",
        "--tau",
        "0.3",
    ]));
    let ev: Vec<f64> = r["blocks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|b| b["ev_exact"].as_f64().unwrap())
        .collect();
    assert_eq!(ev.len(), 2);
    assert!((ev[0] - 5.0 / 9.0).abs() < 1e-12);
    assert!((ev[1] - 4.0 / 9.0).abs() < 1e-12);
}

#[test]
fn discard_drops_low_variance_column() {
    let dir = TempDir::new().unwrap();
    let data = example_data(dir.path(), 0.05);
    let out = dir.path().join("reduced.csv");
    let res = pla(&[
        "discard",
        "--input",
        s(&data),
        "--tau",
        "0.7",
        "--ev-cutoff",
        "0.1",
        "--out",
        s(&out),
    ]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().next().unwrap(), "X1,X2");
    assert_eq!(text.lines().count(), 2001);
}

#[test]
fn missing_input_is_usage_error() {
    let out = pla(&["analyze"]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_json(&out);
    assert_eq!(err["code"], "usage");
    assert!(err["message"].as_str().unwrap().contains("--input"));
}

#[test]
fn unreadable_file_reports_io_error() {
    let out = pla(&["analyze", "--input", "/nonexistent/data.csv"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(stderr_json(&out)["code"], "io");
}

#[test]
fn asymmetric_delta_is_rejected() {
    let dir = TempDir::new().unwrap();
    let base = write(dir.path(), "base.csv", "4,0\n0,1\n");
    let delta = write(dir.path(), "delta.csv", "0,0.1\n0.2,0\n");
    let out = pla(&[
        "bound",
        "--input",
        s(&base),
        "--delta",
        s(&delta),
        "--tau",
        "0.2",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(stderr_json(&out)["code"], "symmetry");
}

#[test]
fn bound_on_diagonal_pair() {
    let dir = TempDir::new().unwrap();
    let base = write(dir.path(), "base.csv", "4,0\n0,1\n");
    let delta = write(dir.path(), "delta.csv", "0,0.1\n0.1,0\n");
    let r = stdout_json(&pla(&[
        "bound",
        "--input",
        s(&base),
        "--delta",
        s(&delta),
        "--tau",
        "0.2",
    ]));
    let first = &r["eigenvectors"][0];
    assert!((first["bound"].as_f64().unwrap() - 0.4 / 3.0).abs() < 1e-12);
    assert_eq!(first["implies_below_tau"], true);
    assert!((first["measured"].as_f64().unwrap() - 0.0333).abs() < 1e-3);
}

#[test]
fn sensitivity_reports_shrinking_entry() {
    let dir = TempDir::new().unwrap();
    let m = write(dir.path(), "m.csv", "1,0.01\n0.01,1\n");
    let r = stdout_json(&pla(&[
        "sensitivity",
        "--input",
        s(&m),
        "--variable",
        "1",
        "--max-increment",
        "1",
        "--steps",
        "10",
    ]));
    assert_eq!(r["sign_match"], true);
    let points = r["points"].as_array().unwrap();
    assert_eq!(points.len(), 10);
    for p in points {
        assert!(p["differences"][1].as_f64().unwrap() < 0.0);
    }
    let last = points.last().unwrap()["abs_entries"][1].as_f64().unwrap();
    assert!(last < 0.05);
}

#[test]
fn simulate_rate_is_in_tenths_and_reproducible() {
    let args = [
        "simulate", "--M", "8", "--k", "1", "--N", "200", "--tau", "0.5", "--S", "10", "--seed",
        "9",
    ];
    let a = pla(&args);
    let b = pla(&args);
    assert_eq!(a.stdout, b.stdout);
    let r = stdout_json(&a);
    let rate = r["rate"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&rate));
    assert!((rate * 10.0 - (rate * 10.0).round()).abs() < 1e-12);
    assert_eq!(r["seeds"].as_array().unwrap().len(), 10);
}

#[test]
fn infeasible_scenario_is_usage_error() {
    let out = pla(&[
        "simulate", "--M", "3", "--k", "2", "--N", "100", "--tau", "0.5", "--S", "5",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn reproduce_table_writes_csv_and_manifest() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("t.csv");
    let manifest = dir.path().join("m.json");
    let out = pla(&[
        "reproduce-table",
        "--table",
        "II",
        "--M",
        "8",
        "--k",
        "2",
        "--N",
        "200",
        "--S",
        "5",
        "--out",
        s(&csv),
        "--manifest",
        s(&manifest),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "M,k_or_kappa,N,tau,rate,ci_low,ci_high,S");
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("8,2,200,0.6,"));
    let m: Value = serde_json::from_str(&std::fs::read_to_string(&manifest).unwrap()).unwrap();
    assert_eq!(m["master_seed"], 42);
}

#[test]
fn help_exits_zero() {
    let out = pla(&["--help"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("analyze"));
}
