use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn polyharm(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polyharm"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn write(dir: &Path, name: &str, text: &str) {
    fs::write(dir.join(name), text).unwrap();
}

const PARAMS: &str = r#"{"N":5,"m":1,"sign":"plus","kernel":{"variant":"riesz","alpha":2.0},"p":2.0,"q":2.0}"#;

#[test]
fn classify_exits_zero_with_verdict() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "p.json", PARAMS);
    let out = polyharm(dir.path(), &["classify", "-i", "p.json"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["command"], "classify");
    assert_eq!(v["result"]["status"], "exists_nontrivial");
}

#[test]
fn classify_below_threshold_is_nonexistence() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "p.json", &PARAMS.replace(r#""p":2.0,"q":2.0"#, r#""p":1.2,"q":1.4"#));
    let out = polyharm(dir.path(), &["classify", "-i", "p.json"]);
    assert_eq!(code(&out), 0);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["result"]["status"], "no_nontrivial_solution");
}

#[test]
fn classify_system_reports_structure() {
    let dir = tempfile::tempdir().unwrap();
    let k = r#"{"variant":"riesz","alpha":2.0}"#;
    let spec = format!(
        r#"{{"N":5,"m":2,"form":"cross","adjacency":[[0,1],[1,0]],"p":[[2,2],[2,2]],"q":[[2,2],[2,2]],"kernels":[[{k},{k}],[{k},{k}]]}}"#
    );
    write(dir.path(), "s.json", &spec);
    let out = polyharm(dir.path(), &["classify-system", "-i", "s.json"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["result"]["verdict"], "all_vanish");
}

#[test]
fn region_csv_with_zero_samples_fails() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "r.json", r#"{"N":5,"m":1,"alpha":2.0,"p_range":[1,3],"samples":0}"#);
    let out = polyharm(dir.path(), &["region-csv", "-i", "r.json"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("samples"));
}

#[test]
fn region_csv_writes_grid_and_boundary() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "r.json", r#"{"N":5,"m":1,"alpha":2.0,"p_range":[1,3],"samples":5}"#);
    let out = polyharm(dir.path(), &["region-csv", "-i", "r.json", "-o", "reg.csv"]);
    assert_eq!(code(&out), 0);
    let grid = fs::read_to_string(dir.path().join("reg.csv")).unwrap();
    assert_eq!(grid.lines().next(), Some("p,q,verdict"));
    assert_eq!(grid.lines().count(), 26);
    let boundary = fs::read_to_string(dir.path().join("reg_boundary.csv")).unwrap();
    assert_eq!(boundary.lines().count(), 6);
}

#[test]
fn schema_mismatch_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "p.json", &PARAMS.replacen('{', r#"{"schema_version":99,"#, 1));
    let out = polyharm(dir.path(), &["classify", "-i", "p.json"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("schema_version"));
}

#[test]
fn missing_input_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = polyharm(dir.path(), &["classify"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn construct_verify_round_trip_and_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "p.json", PARAMS);
    let small = ["--grid-min", "0.1", "--grid-max", "1000", "--grid-points", "12"];

    let mut args = vec!["construct", "-i", "p.json", "-o", "c.json"];
    args.extend(small);
    let out = polyharm(d, &args);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(d.join("c_u.csv").exists());

    // Byte-identical on a rerun.
    let first = fs::read(d.join("c.json")).unwrap();
    let first_csv = fs::read(d.join("c_u.csv")).unwrap();
    assert_eq!(code(&polyharm(d, &args)), 0);
    assert_eq!(first, fs::read(d.join("c.json")).unwrap());
    assert_eq!(first_csv, fs::read(d.join("c_u.csv")).unwrap());

    let mut args = vec!["verify", "-i", "c.json", "--profile", "c_u.csv", "--spot-checks", "3"];
    args.extend(small);
    let out = polyharm(d, &args);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["result"]["pass"], true);
    assert_eq!(v["result"]["certification"]["samples"].as_array().unwrap().len(), 15);

    // Inflate the scale tenfold: the inequality breaks.
    let mut report: Value = serde_json::from_slice(&first).unwrap();
    let scale = report["result"]["scale"].as_f64().unwrap();
    report["result"]["scale"] = Value::from(10.0 * scale);
    write(d, "bad.json", &serde_json::to_string(&report).unwrap());
    let mut args = vec!["verify", "-i", "bad.json"];
    args.extend(small);
    let out = polyharm(d, &args);
    assert_eq!(code(&out), 1);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.starts_with("FAIL") && err.contains("at r = "), "{err}");

    let out = polyharm(d, &["classify", "-i", "c.json"]);
    assert_eq!(code(&out), 1, "a construct report is not a parameter file");
}

#[test]
fn verify_rejects_report_of_other_command() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "p.json", PARAMS);
    assert_eq!(code(&polyharm(dir.path(), &["classify", "-i", "p.json", "-o", "cl.json"])), 0);
    let out = polyharm(dir.path(), &["verify", "-i", "cl.json"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("classify"));
}

#[test]
fn potential_of_plateau() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "w.json", r#"{"N":9,"m":2,"source":{"kind":"plateau","radius":1.0}}"#);
    let out = polyharm(dir.path(), &["potential", "-i", "w.json", "-o", "w_out.json", "--grid-points", "4096"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("w_out.json")).unwrap()).unwrap();
    assert!((v["result"]["tail_slope"].as_f64().unwrap() + 5.0).abs() < 0.05);
    let csv = fs::read_to_string(dir.path().join("w_out_levels.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("radius,W_1,W_2"));
    assert_eq!(csv.lines().count(), 4097);
}

#[test]
fn decay_fit_subcritical() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "d.json",
        r#"{"N":5,"alpha":2.0,"profile":{"kind":"expr","terms":[{"coeff":1.0,"j":0,"a":1.0,"s":2.0}]}}"#,
    );
    let out = polyharm(dir.path(), &["decay-fit", "-i", "d.json"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["result"]["fit"]["regime"], "subcritical");
    assert_eq!(v["result"]["agrees"], true);
}

#[test]
fn barrier_report_on_explicit_profile() {
    let dir = tempfile::tempdir().unwrap();
    // u = (1+r²)^{-3/2} in N = 5, m = 1: superharmonic, cutoff ratio grows.
    let input = format!(
        r#"{{"params":{PARAMS},"profile":{{"kind":"expr","terms":[{{"coeff":1.0,"j":0,"a":1.0,"s":1.5}}]}}}}"#
    );
    write(dir.path(), "b.json", &input);
    let out = polyharm(dir.path(), &["barrier-report", "-i", "b.json", "-o", "b_out.json"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("b_out.json")).unwrap()).unwrap();
    assert_eq!(v["result"]["poly_superharmonic"]["pass"], true);
    assert_eq!(v["result"]["cutoff"]["bounded_below"], true);
    assert!(dir.path().join("b_out_cutoff.csv").exists());
}

#[test]
fn bad_thread_count_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "p.json", PARAMS);
    let out = Command::new(env!("CARGO_BIN_EXE_polyharm"))
        .current_dir(dir.path())
        .env("POLYHARM_THREADS", "zero")
        .args(["classify", "-i", "p.json"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 1);
}
