use std::path::Path;
use std::process::{Command, Output};

fn qkick(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qkick"))
        .args(args)
        .current_dir(dir)
        .env("QKICK_THREADS", "2")
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    std::fs::write(dir.join(name), body).unwrap();
    name.to_string()
}

const BASE: &str = "schema_version = 1\ntemperature = 1.0\nkick = \"C:x:pi/2\"\ntau_k = \"pi/2\"\nn_kicks = 20\nname = \"t\"\n";

#[test]
fn evolve_writes_series_matrix_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.toml", BASE);
    let out = qkick(&["evolve", "--config", &cfg, "--out", "res"], dir.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let res = dir.path().join("res");
    let series = std::fs::read_to_string(res.join("t_series.csv")).unwrap();
    assert!(series.lines().next().unwrap().starts_with("tau,"));
    assert_eq!(series.lines().filter(|l| l.contains(",pre,")).count(), 20);
    assert_eq!(
        std::fs::read_to_string(res.join("t_rho.csv"))
            .unwrap()
            .lines()
            .count(),
        65
    );
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(res.join("t_summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["name"], "t");
    assert_eq!(summary["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn set_overrides_file_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.toml", BASE);
    let out = qkick(
        &[
            "evolve",
            "--config",
            &cfg,
            "--set",
            "name=\"other\"",
            "--set",
            "n_kicks=3",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let series = std::fs::read_to_string(dir.path().join("qkick-out/other_series.csv")).unwrap();
    assert_eq!(series.lines().filter(|l| l.contains(",post,")).count(), 3);
}

#[test]
fn sweep_writes_one_row_per_point() {
    let dir = tempfile::tempdir().unwrap();
    let body = "schema_version = 1\ntemperature = 1.0\nkick = \"A:x:kappa\"\nkappa_grid = \"0:pi:3\"\nq_grid = [4, 8]\nname = \"s\"\n";
    let cfg = write(dir.path(), "sweep.toml", body);
    let out = qkick(
        &["sweep", "--config", &cfg, "--grid", "both", "--out", "."],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(dir.path().join("s_sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 6);
    assert!(String::from_utf8_lossy(&out.stdout).contains("slope"));
    assert!(dir.path().join("s_sweep.json").exists());
}

#[test]
fn validate_reports_every_issue_with_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "bad.toml",
        "schema_version = 1\ntemperature = -1\ndelta = [1.0, 1.5]\nmystery = 3\n",
    );
    let out = qkick(&["validate", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    for key in ["temperature", "delta", "mystery"] {
        assert!(err.contains(key), "{key} missing from {err}");
    }
}

#[test]
fn validate_accepts_good_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "ok.toml", BASE);
    let out = qkick(&["validate", "--config", &cfg], dir.path());
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok: 3 qubits"));
}

#[test]
fn missing_config_file_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        qkick(&["evolve", "--config", "nope.toml"], dir.path())
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn bad_thread_count_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "s.toml",
        "schema_version = 1\ntemperature = 1.0\nkick = \"A:x:pi/2\"\nq_grid = [4]\n",
    );
    let out = Command::new(env!("CARGO_BIN_EXE_qkick"))
        .args(["sweep", "--config", &cfg, "--grid", "tau_k"])
        .current_dir(dir.path())
        .env("QKICK_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn divergent_integration_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let body = "schema_version = 1\ntemperature = 1.0\nbeta = 50.0\ndt = 2.0\nkick = \"A:x:pi/2\"\ntau_k = 10.0\nn_kicks = 5\n";
    let cfg = write(dir.path(), "blow.toml", body);
    let out = qkick(&["evolve", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("numerical failure"));
}

#[test]
fn figure_preset_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = qkick(&["figure", "1", "--out", "figs"], dir.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(dir.path().join("figs/fig1_report.json").exists());
    assert_eq!(
        qkick(&["figure", "3", "--tau-k", "pi"], dir.path())
            .status
            .code(),
        Some(1)
    );
    assert_eq!(qkick(&["figure", "10"], dir.path()).status.code(), Some(1));
}
