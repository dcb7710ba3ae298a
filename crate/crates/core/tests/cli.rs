//! End-to-end checks of the command-line interface.

use std::fs;
use std::process::Command;

fn rispla() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rispla"))
}

#[test]
fn list_names_every_experiment() {
    let out = rispla().arg("list").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in [
        "roc-tag",
        "tag-power-density",
        "roc-reader",
        "attacker-density",
        "distance-table",
        "asc",
        "roc-malicious-ris",
    ] {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name}");
    }
}

#[test]
fn spec_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    for (body, needle) in [
        ("name = roc-tag\nfoo = 1\n", "foo"),
        ("name = roc-tag\ntrials = 10\n", "trials"),
        ("name = roc-tag\nrss_ratio_threshold = 2\n", "rss_ratio_threshold"),
        ("trials = 200\n", "name"),
    ] {
        let spec = dir.path().join("bad.spec");
        fs::write(&spec, body).unwrap();
        let out = rispla()
            .args(["run", "--spec"])
            .arg(&spec)
            .arg("--out")
            .arg(dir.path().join("out"))
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(2), "{body}");
        assert!(String::from_utf8_lossy(&out.stderr).contains(needle), "{body}");
    }
    let out = rispla()
        .args(["run", "--spec", "/nonexistent/x.spec", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unwritable_output_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("ok.spec");
    fs::write(&spec, "name = distance-table\ntrials = 100\nn_ris_list = 0\n").unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let out = rispla()
        .args(["run", "--spec"])
        .arg(&spec)
        .arg("--out")
        .arg(blocker.join("sub"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn run_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("roc.spec");
    fs::write(&spec, "name = roc-tag\nn_ris_list = 0, 20\n").unwrap();
    let out_dir = dir.path().join("out");
    let status = rispla()
        .args(["run", "--spec"])
        .arg(&spec)
        .arg("--out")
        .arg(&out_dir)
        .args(["--trials", "300", "--seed", "5", "--threads", "2", "--timing"])
        .status()
        .unwrap();
    assert!(status.success());
    for f in ["roc-tag_N0.csv", "roc-tag_N20.csv", "summary.json", "timing.json"] {
        assert!(out_dir.join(f).exists(), "{f}");
    }
    let csv = fs::read_to_string(out_dir.join("roc-tag_N20.csv")).unwrap();
    assert!(csv.starts_with("threshold,tpr,fpr\n"));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["seed"], 5);
    assert_eq!(summary["trials"], 300);
    assert!(summary["version"].as_str().unwrap().starts_with("rispla v"));
    assert!(summary["config"]["params"]["source_power_dbm"].is_number());
    assert!(summary["metric_definition"].is_string());
    let aucs: Vec<f64> = summary["results"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["auc"].as_f64().unwrap())
        .collect();
    assert_eq!(aucs.len(), 2);
}

#[test]
fn format_selects_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("d.spec");
    fs::write(&spec, "name = distance-table\ntrials = 100\nn_ris_list = 0\n").unwrap();
    for (fmt, csv, json) in [("csv", true, false), ("json", false, true), ("both", true, true)] {
        let out_dir = dir.path().join(fmt);
        let ok = rispla()
            .args(["run", "--spec"])
            .arg(&spec)
            .arg("--out")
            .arg(&out_dir)
            .args(["--format", fmt])
            .status()
            .unwrap();
        assert!(ok.success());
        assert_eq!(out_dir.join("distance-table_N0.csv").exists(), csv, "{fmt}");
        assert_eq!(out_dir.join("summary.json").exists(), json, "{fmt}");
    }
}
