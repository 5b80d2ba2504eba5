use std::path::Path;
use std::process::{Command, Output};
use swipt_cli::ROW_HEADER;
use swipt_core::RobustReport;

const SMALL: &str = r#"{"nt": 3, "r_min": 0.5, "experiment": {"realizations": 2, "grid_points": 6, "k_list": [1, 2]}}"#;
const HOPELESS: &str = r#"{"nt": 3, "psi_s_w": 100.0, "experiment": {"realizations": 2, "grid_points": 4}}"#;

fn swipt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_swipt")).args(args).env("SWIPT_THREADS", "1").output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn selftest_passes() {
    let out = swipt(&["solver-selftest"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["passed"], serde_json::Value::Bool(true));
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", r#"{"nt": 3, "bogus_w": 1}"#);
    assert_eq!(swipt(&["design", "--config", &bad]).status.code(), Some(2));
    let good = write(dir.path(), "small.json", SMALL);
    assert_eq!(swipt(&["cdf", "--config", &good, "--grid-step", "-1"]).status.code(), Some(2));
    let out = Command::new(env!("CARGO_BIN_EXE_swipt"))
        .args(["solver-selftest"])
        .env("SWIPT_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn infeasible_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "hopeless.json", HOPELESS);
    assert_eq!(swipt(&["design", "--config", &cfg]).status.code(), Some(3));
    let csv = dir.path().join("cdf.csv");
    let out = swipt(&["cdf", "--config", &cfg, "--out", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next(), Some(ROW_HEADER));
    assert_eq!(text.lines().count(), 5);
}

#[test]
fn k_sweep_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.json", SMALL);
    let csv = dir.path().join("k.csv");
    let out = swipt(&["k-sweep", "--config", &cfg, "--seed", "5", "--out", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], ROW_HEADER);
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("0,5,3,1,0.5,robust,"));
    for suffix in ["summary", "monotone"] {
        assert!(dir.path().join(format!("k_{suffix}.csv")).exists());
    }
}

#[test]
fn design_then_verify() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.json", SMALL);
    let design = dir.path().join("d.json");
    let dump = dir.path().join("p4.txt");
    let out = swipt(&[
        "design",
        "--config",
        &cfg,
        "--realization",
        "1",
        "--out",
        design.to_str().unwrap(),
        "--dump-problem",
        dump.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(std::fs::metadata(&dump).unwrap().len() > 0);
    let out = swipt(&["verify", "--config", &cfg, "--realization", "1", "--design", design.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let report: RobustReport = serde_json::from_slice(&out.stdout).unwrap();
    assert!(report.satisfied(1e-6), "{report:?}");
}

#[test]
fn preset_flag_warns() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("p.csv");
    let out = swipt(&["cdf", "--paper-preset", "--realizations", "1", "--grid-step", "2.0", "--out", csv.to_str().unwrap()]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning: --paper-preset"));
    assert!(matches!(out.status.code(), Some(0 | 3)));
}
