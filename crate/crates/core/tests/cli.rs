//! Runs the `sim` binary.

use std::path::Path;
use std::process::{Command, Output};

fn sim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sim"))
        .args(args)
        .output()
        .expect("sim starts")
}

fn recipes() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../recipes")
}

#[test]
fn config_mode_writes_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("cim");
    let config = recipes().join("default-config.json");
    let out = sim(&[
        "--system",
        "otfs-cim",
        "--config",
        config.to_str().unwrap(),
        "--snr",
        "-2:2:4",
        "--max-frames",
        "64",
        "--min-errors",
        "0",
        "--seed",
        "5",
        "--out",
        prefix.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let csv = std::fs::read_to_string(dir.path().join("cim.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(
        lines[0],
        "system,snr_db,frames,bits,errors,ber,ci95,throughput_bps"
    );
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("otfs-cim,-2.0,64,1536,"));

    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("cim.json")).unwrap())
            .unwrap();
    assert_eq!(json["spec"]["seed"], 5);
    assert_eq!(json["spec"]["snr_db_list"].as_array().unwrap().len(), 4);
    assert_eq!(json["records"].as_array().unwrap().len(), 4);
    assert!(dir.path().join("cim-metrics.csv").exists());
}

#[test]
fn same_seed_same_csv() {
    let dir = tempfile::tempdir().unwrap();
    let config = recipes().join("default-config.json");
    let run = |name: &str, threads: &str| {
        let prefix = dir.path().join(name);
        let out = sim(&[
            "--system",
            "otfs-cim",
            "--config",
            config.to_str().unwrap(),
            "--snr",
            "0:3:6",
            "--max-frames",
            "128",
            "--seed",
            "11",
            "--threads",
            threads,
            "--out",
            prefix.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        std::fs::read(dir.path().join(format!("{name}.csv"))).unwrap()
    };
    assert_eq!(run("a", "1"), run("b", "4"));
}

#[test]
fn recipe_mode_writes_one_file_set_per_curve() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("fig7");
    let recipe = recipes().join("fig7.json");
    let out = sim(&[
        "--recipe",
        recipe.to_str().unwrap(),
        "--snr",
        "10",
        "--max-frames",
        "64",
        "--out",
        prefix.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for label in ["otfs-cim", "otfs-sm", "otfs"] {
        let csv = std::fs::read_to_string(dir.path().join(format!("fig7-{label}.csv"))).unwrap();
        assert_eq!(csv.lines().count(), 2, "{label}");
    }
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("24 bpcu"));
}

#[test]
fn bad_invocations_fail() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("x");
    let p = prefix.to_str().unwrap();
    let config = recipes().join("default-config.json");
    let c = config.to_str().unwrap();

    // no mode
    assert!(!sim(&["--out", p]).status.success());
    // config without a system
    assert!(!sim(&["--config", c, "--snr", "0", "--out", p])
        .status
        .success());
    // missing SNR grid
    assert!(!sim(&["--system", "otfs", "--config", c, "--out", p])
        .status
        .success());
    // descending SNR grid
    let reversed = sim(&[
        "--system", "otfs-cim", "--config", c, "--snr", "5:1:0", "--out", p,
    ]);
    assert!(!reversed.status.success());
    assert!(String::from_utf8_lossy(&reversed.stderr).contains("error"));
    let missing = sim(&[
        "--system",
        "otfs-cim",
        "--config",
        "/nonexistent.json",
        "--snr",
        "0",
        "--out",
        p,
    ]);
    assert!(!missing.status.success());
}
