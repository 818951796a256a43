use std::path::Path;
use std::process::{Command, Output};

use skewmix::config::fixture;

fn skewmix(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_skewmix")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn missing_experiment_is_an_error() {
    let out = skewmix(&["gibbs"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--fixture"));
}

#[test]
fn lattice_drift_stops_at_the_scan() {
    let out = skewmix(&["--fixture", "lattice", "thm-b"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("aperiodicity scan failed"));
}

#[test]
fn one_sided_pipeline_refuses_two_sided_drift() {
    let out = skewmix(&["--fixture", "r1-two-sided", "thm-b"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("one-sided"));
}

#[test]
fn oracle_lists_every_n() {
    let text = stdout(&skewmix(&["--fixture", "r3", "oracle", "--n", "4"]));
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().enumerate().all(|(i, r)| r.starts_with(&format!("{},oracle,", i + 1))));
}

#[test]
fn spectral_and_oracle_commands_agree() {
    let spectral = stdout(&skewmix(&["--fixture", "r3", "correlate", "--n-list", "3,7"]));
    let oracle = stdout(&skewmix(&["--fixture", "r3", "correlate", "--n-list", "3,7", "--method", "oracle"]));
    for (a, b) in spectral.lines().zip(oracle.lines()).skip(1) {
        let x: f64 = a.split(',').nth(2).unwrap().parse().unwrap();
        let y: f64 = b.split(',').nth(2).unwrap().parse().unwrap();
        assert!((x - y).abs() < 1e-12, "{a} vs {b}");
    }
}

#[test]
fn expand_accepts_raw_jets() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("jets.json");
    let fact = |j: usize| (1..=j).map(|i| i as f64).product::<f64>();
    let g: Vec<[f64; 2]> =
        (0..=12).map(|j| [if j % 2 == 0 { (-1f64).powi(j as i32 / 2) / fact(j / 2) } else { 0.0 }, 0.0]).collect();
    let v: Vec<[f64; 2]> = (0..=12).map(|j| [2f64.powi(j as i32) / fact(j), 0.0]).collect();
    std::fs::write(&path, serde_json::json!({ "g": g, "v": v }).to_string()).unwrap();
    let out: serde_json::Value =
        serde_json::from_str(&stdout(&skewmix(&["expand", "--jets", path.to_str().unwrap(), "--k", "3"]))).unwrap();
    for m in 0..3 {
        let c = out["coefficients"][m][0].as_f64().unwrap();
        assert!((c - std::f64::consts::PI.sqrt() / fact(m)).abs() < 1e-14);
    }
}

#[test]
fn config_file_and_fixture_give_identical_output() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r2.json");
    std::fs::write(&path, fixture("r2").unwrap().to_json().unwrap()).unwrap();
    let from_file = stdout(&skewmix(&["--config", path.to_str().unwrap(), "thm-b"]));
    let from_fixture = stdout(&skewmix(&["--fixture", "r2", "thm-b"]));
    assert_eq!(from_file, from_fixture);
    assert_eq!(from_file.lines().count(), 6);
}

#[test]
fn two_sided_run_writes_all_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    stdout(&skewmix(&["--fixture", "r1-two-sided", "--out", out, "thm-a"]));
    for file in ["correlations.csv", "expansion.json", "report.json", "reduction.json", "invariance.json"] {
        assert!(dir.path().join(file).exists(), "{file}");
    }
    let inv = json(&dir.path().join("invariance.json"));
    assert_eq!(inv["schema_version"], 1);
    assert!(inv["max_difference"].as_f64().unwrap() <= 1e-8);
    let red = json(&dir.path().join("reduction.json"));
    assert!(red["cohomology_residual"].as_f64().unwrap() <= 1e-12);
}

#[test]
fn scan_and_spectrum_report_json_and_csv() {
    let scan: serde_json::Value = serde_json::from_str(&stdout(&skewmix(&["--fixture", "r2", "scan"]))).unwrap();
    assert_eq!(scan["pass"], true);
    let spectrum =
        stdout(&skewmix(&["--fixture", "r2", "spectrum", "--xi-min", "-0.5", "--xi-max", "0.5", "--points", "5"]));
    let rows: Vec<&str> = spectrum.lines().collect();
    assert_eq!(rows.len(), 6);
    let centre: Vec<f64> = rows[3].split(',').map(|c| c.parse().unwrap()).collect();
    assert_eq!(centre[0], 0.0);
    assert!((centre[1] - 1.0).abs() < 1e-13);
}
