use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn base_config() -> Value {
    json!({
        "mu": 1.0,
        "hbar": 1.0,
        "u0_bar": 2.0_f64.sqrt(),
        "v2_offset": 2.5,
        "a_bar": std::f64::consts::PI,
        "r0": 1.0,
        "v": 0.2,
        "v0_override": 1.0,
        "n": 1,
        "t_final": 3.0,
        "sample_count": 30,
        "n_points": 1024,
        "dt_divisor": 500.0
    })
}

fn write_config(dir: &Path, name: &str, config: &Value) -> std::path::PathBuf {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(config).unwrap()).unwrap();
    path
}

fn deltadrift(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_deltadrift")).args(args).output().unwrap()
}

fn error_record(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().expect("error record on stderr");
    serde_json::from_str(line).unwrap()
}

#[test]
fn analytic_csv_to_stdout() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "a.json", &base_config());
    let out = deltadrift(&["analytic", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,tau,alpha,p_survival,p_nonadiabatic");
    assert_eq!(lines.count(), 31);
}

#[test]
fn json_output_carries_summary() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "a.json", &base_config());
    let target = dir.path().join("nested/out.json");
    let out = deltadrift(&[
        "analytic",
        "--config",
        cfg.to_str().unwrap(),
        "--format",
        "json",
        "--out",
        target.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let doc: Value = serde_json::from_str(&fs::read_to_string(target).unwrap()).unwrap();
    let h_sq = doc["summary"]["resonance"]["h_sq"].as_f64().unwrap();
    assert!((h_sq - 0.2).abs() < 1e-12);
}

#[test]
fn set_overrides_config_values() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "a.json", &base_config());
    let out = deltadrift(&["analytic", "--config", cfg.to_str().unwrap(), "--set", "sample_count=5"]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 7);
}

#[test]
fn unknown_key_exits_with_validation_code() {
    let dir = TempDir::new().unwrap();
    let mut config = base_config();
    config["foo"] = json!(1);
    let cfg = write_config(dir.path(), "bad.json", &config);
    let out = deltadrift(&["analytic", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(error_record(&out).to_string().contains("foo"));
}

#[test]
fn under_resolved_grid_exits_with_validation_code() {
    let dir = TempDir::new().unwrap();
    let mut config = base_config();
    config["n_points"] = json!(32);
    let cfg = write_config(dir.path(), "coarse.json", &config);
    let out = deltadrift(&["oracle", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn boundary_leak_exits_with_integrity_code() {
    let dir = TempDir::new().unwrap();
    let mut config = base_config();
    config["pad"] = json!(1.2);
    config["v"] = json!(0.0);
    config["t_final"] = json!(10.0);
    config["sample_count"] = json!(100);
    let cfg = write_config(dir.path(), "leaky.json", &config);
    let target = dir.path().join("leaky.csv");
    let out = deltadrift(&["compare", "--config", cfg.to_str().unwrap(), "--out", target.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(error_record(&out).to_string().contains("leak"));
    // data is still written for inspection
    assert!(fs::read_to_string(&target).unwrap().starts_with("t,tau,"));
    assert!(dir.path().join("leaky.summary.json").exists());
}

#[test]
fn identical_invocations_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.json", &base_config());
    let mut outputs = Vec::new();
    for name in ["one.csv", "two.csv"] {
        let target = dir.path().join(name);
        let out = deltadrift(&["compare", "--config", cfg.to_str().unwrap(), "--out", target.to_str().unwrap()]);
        assert!(matches!(out.status.code(), Some(0) | Some(3)));
        outputs.push(fs::read(target).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn sweep_output_does_not_depend_on_jobs() {
    let dir = TempDir::new().unwrap();
    let mut config = base_config();
    config["sweep"] = json!({"parameter": "v0_override", "values": [0.01, 2.0, 0.5, 9.0, 1.0, 0.1]});
    let cfg = write_config(dir.path(), "s.json", &config);
    let serial = deltadrift(&["sweep", "--config", cfg.to_str().unwrap(), "--jobs", "1"]);
    let parallel = deltadrift(&["sweep", "--config", cfg.to_str().unwrap(), "--jobs", "4"]);
    assert!(serial.status.success() && parallel.status.success());
    assert_eq!(serial.stdout, parallel.stdout);
    let text = String::from_utf8(serial.stdout).unwrap();
    let firsts: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(firsts, vec![0.01, 2.0, 0.5, 9.0, 1.0, 0.1]);
}

#[test]
fn sweep_without_axis_is_rejected() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "s.json", &base_config());
    let out = deltadrift(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_config_is_an_io_failure() {
    let out = deltadrift(&["analytic", "--config", "/nonexistent/deltadrift.json"]);
    assert_eq!(out.status.code(), Some(1));
}
