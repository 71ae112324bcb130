use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_utoda")).args(args).output().unwrap()
}

fn config(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name).to_str().unwrap().to_string()
}

fn report(dir: &Path, name: &str) -> Value {
    serde_json::from_slice(&std::fs::read(dir.join(name)).unwrap()).unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn verify_algebra_writes_a_passing_report() {
    let d = tempfile::tempdir().unwrap();
    let out = bin(&["verify-algebra", "--max-rank", "4", "--out", d.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(d.path(), "verify-algebra.json");
    assert_eq!(r["pass"], true);
    assert_eq!(r["suites"].as_array().unwrap().len(), 4);
}

#[test]
fn missing_grid_is_a_config_error_with_pointer() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(d.path(), "c.json", r#"{"algebra":{"series":"A","n":2}}"#);
    let out = bin(&["toda", "--config", &cfg, "--out", d.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/grid"));
}

#[test]
fn unknown_key_and_unknown_task_are_rejected() {
    let d = tempfile::tempdir().unwrap();
    let grid = r#""grid":{"x0":-0.5,"y0":-0.5,"hx":0.01,"hy":0.01,"nx":21,"ny":21}"#;
    let c1 = write(d.path(), "a.json", &format!(r#"{{"algebra":{{"series":"A","n":2,"rank":3}},{grid}}}"#));
    let out = bin(&["toda", "--config", &c1, "--out", d.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/algebra"));
    let c2 = write(d.path(), "b.json", &format!(r#"{{"algebra":{{"series":"A","n":2}},{grid},"tasks":["toda","nope"]}}"#));
    let out = bin(&["toda", "--config", &c2, "--out", d.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/tasks/1"));
}

#[test]
fn vanishing_tau_exits_with_singularity() {
    // 1 + xy vanishes at the corners (1, -1) and (-1, 1)
    let d = tempfile::tempdir().unwrap();
    let cfg = write(d.path(), "c.json", r#"{"algebra":{"series":"A","n":1},"grid":{"x0":-1,"y0":-1,"hx":0.1,"hy":0.1,"nx":21,"ny":21}}"#);
    let out = bin(&["toda", "--config", &cfg, "--out", d.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn tight_tolerance_fails_with_exit_one() {
    let d = tempfile::tempdir().unwrap();
    let out = bin(&["toda", "--config", &config("a1_closed_form.json"), "--tol", "1e-30", "--out", d.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(report(d.path(), "toda.json")["pass"], false);
}

#[test]
fn bad_arguments_exit_two() {
    assert_eq!(bin(&["bogus"]).status.code(), Some(2));
    assert_eq!(bin(&["toda"]).status.code(), Some(2));
    assert_eq!(bin(&["map", "--kind", "nope", "--in", "x.csv"]).status.code(), Some(2));
}

#[test]
fn map_transforms_a_field_dump() {
    let d = tempfile::tempdir().unwrap();
    let dir = d.path().to_str().unwrap();
    assert_eq!(bin(&["toda", "--config", &config("a3_toda.json"), "--out", dir]).status.code(), Some(0));
    let dump = d.path().join("toda_fields.csv");
    let once = d.path().join("once.csv");
    let out = bin(&["map", "--in", dump.to_str().unwrap(), "--kind", "dt", "--out", once.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(d.path().join("once.json").exists());
    let twice = d.path().join("twice.csv");
    let out = bin(&["map", "--in", once.to_str().unwrap(), "--kind", "dt", "--out", twice.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));

    // the first image is the (u, v) pair one site up
    let (_, fields) = utoda::cli::read_fields(&once).unwrap();
    let (_, tau) = utoda::cli::read_fields(&dump).unwrap();
    let u = &fields["u"];
    let expect = &tau["tau@1"] / &tau["tau@2"];
    let worst = u.iter().zip(expect.iter()).filter(|(a, _)| a.is_finite()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    assert!(worst < 1e-5, "{worst}");
}

#[test]
fn map_oracle_from_config() {
    let d = tempfile::tempdir().unwrap();
    let out = bin(&["map", "--config", &config("a3_map_dt.json"), "--out", d.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(d.path(), "map.json")["pass"], true);
    let out = bin(&["map", "--config", &config("a3_map_dt.json"), "--site", "3", "--out", d.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn report_aggregates_runs() {
    let d = tempfile::tempdir().unwrap();
    let dir = d.path().to_str().unwrap();
    assert_eq!(bin(&["utoda", "--config", &config("a3_utoda12.json"), "--out", dir]).status.code(), Some(0));
    assert_eq!(bin(&["gtoda", "--config", &config("a3_gtoda_mixed.json"), "--out", dir]).status.code(), Some(0));
    let u = d.path().join("utoda.json");
    let g = d.path().join("gtoda.json");
    let out = bin(&["report", u.to_str().unwrap(), g.to_str().unwrap(), "--out", dir]);
    assert_eq!(out.status.code(), Some(0));
    let s = report(d.path(), "summary.json");
    assert_eq!(s["pass"], true);
    assert_eq!(s["reports"].as_array().unwrap().len(), 2);
}

#[test]
fn soliton_config_passes() {
    let d = tempfile::tempdir().unwrap();
    let out = bin(&["soliton", "--config", &config("soliton_k3.json"), "--out", d.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
}
