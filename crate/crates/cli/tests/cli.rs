use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn root(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn coiso(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coiso"))
        .args(args)
        .env_remove("COISO_SEED")
        .output()
        .expect("run coiso")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}", String::from_utf8_lossy(&out.stdout))
    })
}

fn arg(rel: &str) -> String {
    root(rel).display().to_string()
}

#[test]
fn index_of_shear_is_degenerate() {
    let out = coiso(&["index", "--path", &arg("paths/shear.json")]);
    assert_eq!(out.status.code(), Some(2));
    let v = json(&out);
    assert!(v["mean_index"].as_f64().unwrap().abs() < 1e-12);
    assert!(v["cz"].is_null());
}

#[test]
fn index_of_quarter_rotation() {
    let out = coiso(&["index", "--path", &arg("paths/rot90.json")]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!((v["mean_index"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert_eq!(v["cz"], 1);
}

#[test]
fn negative_definite_flow_has_index_n() {
    let out = coiso(&["index", "--path", &arg("paths/neg_definite.json")]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["cz"], 2);
}

#[test]
fn index_csv() {
    let out = coiso(&["--format", "csv", "index", "--path", &arg("paths/rot90.json")]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("mean_index,cz,degenerate_endpoint\n0.500000000000,1,false"));
}

#[test]
fn missing_file() {
    let out = coiso(&["index", "--path", "/nonexistent/path.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["error"], "io");
}

#[test]
fn malformed_path_file() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("bad.json");
    std::fs::write(&f, r#"{"fmt":"sympath-v1","dim":2,"samples":[],"extra":1}"#).unwrap();
    let out = coiso(&["index", "--path", f.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(json(&out)["error"].is_string());
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = coiso(&["index", "--path", &arg("paths/rot90.json"), "--bogus"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["error"], "usage");
}

#[test]
fn bad_tolerance_override() {
    let out = coiso(&["--tol-eig", "-1", "index", "--path", &arg("paths/rot90.json")]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn maslov_of_split_torus_classes() {
    let model = arg("models/torus12.json");
    let out = coiso(&["maslov", "--model", &model, "--class", "1,0"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!((v["mu"].as_f64().unwrap() - 2.0).abs() < 1e-6);
    assert!((v["area"].as_f64().unwrap() - std::f64::consts::PI).abs() < 1e-9);

    let v = json(&coiso(&["maslov", "--model", &model, "--class", "0,0"]));
    assert!(v["mu"].as_f64().unwrap().abs() < 1e-9);
    assert!(v["area"].as_f64().unwrap().abs() < 1e-12);

    let v = json(&coiso(&["maslov", "--model", &model, "--class", "-1,0"]));
    assert!((v["mu"].as_f64().unwrap() + 2.0).abs() < 1e-6);
}

#[test]
fn maslov_bad_arity() {
    let out = coiso(&["maslov", "--model", &arg("models/torus12.json"), "--class", "1,0,0"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(json(&out)["error"].is_string());
}

#[test]
fn theorem_experiment_finds_witness() {
    let out = coiso(&[
        "experiment", "theorem", "--model", &arg("models/torus12.json"), "--delta", "0.1", "--seed", "7",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let v = json(&out);
    assert_eq!(v["pass"], true);
    assert_eq!(v["seed"], 7);
    let text = v.to_string();
    assert!(text.contains("[1,0]"), "{text}");
}

#[test]
fn lemma33_experiment_has_no_violations() {
    let out = coiso(&["experiment", "lemma33", "--n", "3", "--k", "2", "--trials", "40", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["pass"], true);
}

#[test]
fn lemma33_needs_dimensions() {
    let out = coiso(&["experiment", "lemma33", "--trials", "5"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["error"], "bad_parameters");
}

#[test]
fn experiment_is_deterministic_modulo_timestamp() {
    let run = || {
        let mut v = json(&coiso(&["experiment", "lemma33", "--n", "2", "--k", "1", "--trials", "20", "--seed", "5"]));
        v["timestamp"] = Value::Null;
        v.to_string()
    };
    assert_eq!(run(), run());
}

#[test]
fn seed_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_coiso"))
        .args(["experiment", "lemma33", "--n", "2", "--k", "1", "--trials", "5"])
        .env("COISO_SEED", "11")
        .output()
        .unwrap();
    assert_eq!(json(&out)["seed"], 11);
}

#[test]
fn report_file_and_plot_data() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let plot = dir.path().join("plot.csv");
    let out = coiso(&[
        "experiment",
        "lemma35",
        "--model",
        &arg("models/torus12.json"),
        "--eps",
        "0.02",
        "--out",
        report.to_str().unwrap(),
        "--emit-plot-data",
        plot.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let rep: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(rep["pass"], true);
    assert_eq!(rep["seed"], 0);
    let csv = std::fs::read_to_string(&plot).unwrap();
    assert!(csv.starts_with("series,x,y\n"));
    assert!(csv.contains("level_action,") && csv.contains("class_mu,"));
}

#[test]
fn report_csv() {
    let out = coiso(&[
        "--format", "csv", "experiment", "theorem", "--model", &arg("models/flat_torus.json"),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("check,pass,detail\n"));
    assert!(text.lines().skip(1).all(|l| l.contains(",true,")));
}

#[test]
fn failed_check_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("tiny.json");
    let text = std::fs::read_to_string(root("models/torus12.json")).unwrap();
    let mut m: Value = serde_json::from_str(&text).unwrap();
    m["displacement_energy"] = Value::from(0.5);
    std::fs::write(&f, m.to_string()).unwrap();
    let out = coiso(&["experiment", "theorem", "--model", f.to_str().unwrap(), "--delta", "0.1"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stdout));
    assert_eq!(json(&out)["pass"], false);
}
