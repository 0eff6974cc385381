use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use varlex_harness::calibration::Calibration;
use varlex_harness::config::ExperimentConfig;

fn varlex(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_varlex")).args(args).output().expect("spawn varlex")
}

fn shipped(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(format!("{name}.toml"))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const CONSTANT_P: &str = r#"
name = "constant"
[domain]
dim = 1
center = [0.5]
half_width = 0.5
cells = 4
j_min = 0
j_max = 2
[exponents.p]
kind = "constant"
value = 2.0
"#;

#[test]
fn norm_of_a_constant_function() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, CONSTANT_P).unwrap();
    let f = dir.path().join("f.csv");
    fs::write(&f, "n,cells_per_side,half_width,center_0,center_1\n1,4,0.5,0.5,0\n3\n3\n3\n3\n").unwrap();
    let out = varlex(&["norm", "--config", s(&cfg), "--function", s(&f)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    let norm = report["checks"][0]["measured"]["norm"].as_f64().unwrap();
    assert!((norm - 3.0).abs() < 1e-12, "{norm}");
}

#[test]
fn precondition_violation_exits_2_and_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, CONSTANT_P.replace("value = 2.0", "value = 0.5")).unwrap();
    let out = varlex(&["suite", "--config", s(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("exponents.p"), "{err}");
}

#[test]
fn missing_config_exits_2() {
    let out = varlex(&["certify"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn csv_report_and_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = varlex(&["certify", "--config", s(&shipped("thm11_flat")), "--format", "csv", "--out", s(dir.path())]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("check,anchor,pass,key,value\n"), "{text}");
    assert_eq!(fs::read_to_string(dir.path().join("report.csv")).unwrap(), text);
    assert!(dir.path().join("cubes.csv").exists());
    let kappa: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("kappa.json")).unwrap()).unwrap();
    assert!(kappa.is_object());
}

#[test]
fn calibrate_writes_a_loadable_file() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("defaults.toml");
    let out = varlex(&["calibrate", s(&shipped("thm11_flat")), "--write", s(&target)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let cal = Calibration::from_path(&target).unwrap();
    let frozen = Calibration::shipped().verify_bound("thm11_flat").unwrap();
    assert_eq!(cal.verify_bound("thm11_flat"), Some(frozen));
}

#[test]
fn verify_fails_without_a_frozen_bound() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fs::read_to_string(shipped("thm11_flat")).unwrap().replace("\"thm11_flat\"", "\"uncalibrated\"");
    let path = dir.path().join("u.toml");
    fs::write(&path, cfg).unwrap();
    let out = varlex(&["verify", "1.1", "--config", s(&path)]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn shipped_configs_round_trip() {
    for entry in fs::read_dir(Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")).unwrap() {
        let path = entry.unwrap().path();
        let cfg = ExperimentConfig::load(&path).unwrap();
        cfg.setup().unwrap();
        let again = ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(again.to_toml().unwrap(), cfg.to_toml().unwrap(), "{}", path.display());
    }
}
