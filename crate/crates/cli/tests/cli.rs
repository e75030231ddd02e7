use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn nifb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nifb")).args(args).output().expect("run nifb")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout)
        .unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout)))
}

fn write_temp(dir: &tempfile::TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn case_study_pair_is_stable_with_oracle_agreement() {
    let plant = data("case_study_plant.json");
    let ctrl = data("case_study_controller.json");
    let out = nifb(&["stability", plant.to_str().unwrap(), ctrl.to_str().unwrap(), "--json"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v = json(&out);
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["verdict"]["outcome"], "stable");
    assert_eq!(v["verdict"]["criterion"], "double_integrator");
    assert_eq!(v["verdict"]["oracle_agrees"], true);
    assert_eq!(v["ni_report"]["is_ni"], true);
    assert_eq!(v["sni_report"]["is_sni"], true);
    let gain = v["verdict"]["condition_values"]["subspace_gain_max_eig"].as_f64().unwrap();
    assert!((gain + 0.309907).abs() < 1e-5, "{gain}");
    assert!(v["oracle"]["spectral_abscissa"].as_f64().unwrap() < 0.0);
}

#[test]
fn malformed_json_is_an_input_error_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let f = write_temp(&dir, "bad.json", "{\n  \"A\": [[1.0, 2.0],\n");
    let out = nifb(&["classify", &f]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line"), "{}", stderr(&out));
}

#[test]
fn ragged_rows_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let f = write_temp(&dir, "ragged.json", r#"{"A": [[0, 1], [0]], "B": [[0], [1]], "C": [[1, 0]]}"#);
    let out = nifb(&["classify", &f]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("row 2"), "{}", stderr(&out));
}

#[test]
fn overflowing_numbers_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let f = write_temp(&dir, "inf.json", r#"{"A": [[1e999]], "B": [[1]], "C": [[1]]}"#);
    assert_eq!(nifb(&["classify", &f]).status.code(), Some(2));
}

#[test]
fn unknown_keys_and_missing_files_are_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    let f = write_temp(&dir, "extra.json", r#"{"A": [[0]], "B": [[1]], "C": [[1]], "E": [[1]]}"#);
    assert_eq!(nifb(&["classify", &f]).status.code(), Some(2));
    assert_eq!(nifb(&["classify", "/nonexistent/model.json"]).status.code(), Some(2));
}

#[test]
fn ni_violating_plant_fails_precondition() {
    let dir = tempfile::tempdir().unwrap();
    let plant = write_temp(&dir, "p.json", r#"{"A": [[-1]], "B": [[1]], "C": [[-1]], "name": "lag with wrong sign"}"#);
    let ctrl = write_temp(&dir, "c.json", r#"{"irc": {"Gamma": [[2]], "Phi": [[1]], "Delta": [[2]]}}"#);
    let out = nifb(&["stability", &plant, &ctrl, "--json"]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    let v = json(&out);
    assert_eq!(v["verdict"]["outcome"], "precondition_failed");
    assert_eq!(v["ni_report"]["is_ni"], false);
}

#[test]
fn classify_reports_ni_and_sweep_csv() {
    let plant = data("case_study_plant.json");
    let out = nifb(&["classify", plant.to_str().unwrap(), "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["ni_report"]["is_ni"], true);
    assert_eq!(v["ni_report"]["residues"].as_array().unwrap().len(), 1);
    let out = nifb(&["classify", plant.to_str().unwrap(), "--csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("omega,min_eig\n"));
    assert!(text.lines().count() > 400);
    let ctrl = data("case_study_controller.json");
    let v = json(&nifb(&["classify", "--sni", ctrl.to_str().unwrap(), "--json"]));
    assert_eq!(v["sni_report"]["is_sni"], true);
}

#[test]
fn laurent_recovers_rigid_body_gain() {
    let plant = data("case_study_plant.json");
    let v = json(&nifb(&["laurent", plant.to_str().unwrap(), "--json"]));
    let g2 = &v["realization"]["g2"];
    assert!((g2[0][0].as_f64().unwrap() - 0.140679).abs() < 1e-9);
    assert!(g2[1][1].as_f64().unwrap().abs() < 1e-12);
    assert!(v["relative_difference"].as_f64().unwrap() < 1e-6);
    assert_eq!(nifb(&["laurent", plant.to_str().unwrap(), "--csv"]).status.code(), Some(2));
}

#[test]
fn verify_is_deterministic_and_agrees() {
    let a = nifb(&["verify", "--count", "16", "--seed", "3", "--json"]);
    let b = nifb(&["verify", "--count", "16", "--seed", "3", "--json"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    assert_eq!(v["count"], 16);
    assert_eq!(v["agreement"], 1.0);
    assert!(v["counterexamples"].as_array().unwrap().is_empty());
}

#[test]
fn beam_modes_and_scan_tables() {
    let out = nifb(&["beam", "modes", "--count", "2", "--csv"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "index,omega,d_prime,min_eig,max_eig");
    assert_eq!(lines.len(), 3);
    let omega: f64 = lines[1].split(',').nth(1).unwrap().parse().unwrap();
    assert!((omega - 33.95326443354296).abs() < 1e-8);

    let out = nifb(&["beam", "scan", "--points", "50"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("omega,value\n"));
    assert!(text.lines().count() > 45);
}

#[test]
fn beam_params_accept_symbols_and_reject_unknown_fields() {
    let dir = tempfile::tempdir().unwrap();
    let ok = write_temp(&dir, "p.json", r#"{"Ih": 0.0348, "L": 2.0}"#);
    let v = json(&nifb(&["beam", "--params", &ok, "approx", "--modes", "1", "--json"]));
    assert_eq!(v["is_ni"], true);
    assert_eq!(v["modes"].as_array().unwrap().len(), 1);
    let bad = write_temp(&dir, "q.json", r#"{"hub_inertia": 0.0348, "colour": 1}"#);
    assert_eq!(nifb(&["beam", "--params", &bad, "modes"]).status.code(), Some(2));
    let neg = write_temp(&dir, "r.json", r#"{"length": -1}"#);
    assert_eq!(nifb(&["beam", "--params", &neg, "modes"]).status.code(), Some(2));
}

#[test]
fn simulate_emits_time_series() {
    let plant = data("case_study_plant.json");
    let ctrl = data("case_study_controller.json");
    let args = ["simulate", plant.to_str().unwrap(), ctrl.to_str().unwrap(), "--t-end", "1", "--dt", "0.01"];
    let out = nifb(&args);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,theta,Vs");
    assert_eq!(lines.len(), 102);
    let mut json_args = args.to_vec();
    json_args.extend(["--json", "--wiring", "input-disturbance"]);
    let v = json(&nifb(&json_args));
    assert_eq!(v["wiring"], "input_disturbance");
    assert_eq!(v["hurwitz"], true);
    assert_eq!(v["diverged"], false);
    assert_eq!(v["theta"].as_array().unwrap().len(), 101);
}

#[test]
fn bad_arguments_are_input_errors() {
    let plant = data("case_study_plant.json");
    let ctrl = data("case_study_controller.json");
    let (p, c) = (plant.to_str().unwrap(), ctrl.to_str().unwrap());
    assert_eq!(nifb(&["stability", p, c, "--tol", "-1"]).status.code(), Some(2));
    assert_eq!(nifb(&["simulate", p, c, "--dt", "0"]).status.code(), Some(2));
    assert_eq!(nifb(&["frobnicate"]).status.code(), Some(2));
}
