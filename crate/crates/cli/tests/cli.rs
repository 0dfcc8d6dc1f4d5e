//! End-to-end checks of the `unim` binary: flag handling, exit codes, file
//! layout, and output determinism.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL_CONFIG: &str = "node_count = 5\nuser_count = 10\nscheduling_rate = 20.0\nduration = 40.0\nwarmup = 5.0\nmc_runs = 2\n";

fn unim(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_unim"))
        .current_dir(dir)
        .env_remove("UNIM_OUT_DIR")
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.toml");
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn run_exports_expected_file_layout() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL_CONFIG);
    let out = unim(
        tmp.path(),
        &["run", "--config", &cfg, "--policy", "urns", "--seed", "1", "--out", "exported"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let base = tmp.path().join("exported");
    for rel in [
        "summary.json",
        "run_meta.json",
        "run_00/transactions.csv",
        "run_00/node_series.csv",
        "run_01/transactions.csv",
        "run_01/node_series.csv",
    ] {
        assert!(base.join(rel).is_file(), "missing {rel}");
    }

    let tx = fs::read_to_string(base.join("run_00/transactions.csv")).unwrap();
    assert!(tx.starts_with("user_id,node_id,created_at,enqueued_at,issued_at,delay,fee_paid\n"));
    assert!(tx.lines().count() > 100, "expected a busy run");

    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(base.join("run_meta.json")).unwrap()).unwrap();
    assert_eq!(meta["policy"], "urns");
    assert_eq!(meta["base_seed"], 1);
    assert_eq!(meta["seeds"], serde_json::json!([1, 2]));
    assert_eq!(meta["config"]["node_count"], 5);

    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(base.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["runs"], 2);
    assert_eq!(summary["per_node"].as_array().unwrap().len(), 5);
}

#[test]
fn rerun_with_same_seed_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL_CONFIG);
    for dir in ["a", "b"] {
        let out = unim(
            tmp.path(),
            &["run", "--config", &cfg, "--policy", "dbns-plus", "--seed", "9", "--out", dir],
        );
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for rel in [
        "summary.json",
        "run_meta.json",
        "run_00/transactions.csv",
        "run_00/node_series.csv",
    ] {
        let a = fs::read(tmp.path().join("a").join(rel)).unwrap();
        let b = fs::read(tmp.path().join("b").join(rel)).unwrap();
        assert_eq!(a, b, "{rel} differs between identical invocations");
    }
}

#[test]
fn bogus_policy_is_a_usage_error_naming_the_choices() {
    let tmp = tempfile::tempdir().unwrap();
    let out = unim(tmp.path(), &["run", "--policy", "bogus"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("urns") && err.contains("dbns-plus"), "{err}");
}

#[test]
fn unknown_config_key_exits_2_and_names_the_key() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "node_cuont = 5\n");
    let out = unim(tmp.path(), &["validate-config", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(
        String::from_utf8_lossy(&out.stderr).contains("node_cuont"),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn invalid_field_value_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "scheduling_rate = -1.0\n");
    let out = unim(tmp.path(), &["run", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(
        String::from_utf8_lossy(&out.stderr).contains("scheduling_rate"),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn validate_config_echoes_effective_settings() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "node_count = 7\n[aimd]\ninitial_rate = 2.5\n");
    let out = unim(tmp.path(), &["validate-config", "--config", &cfg]);
    assert!(out.status.success());
    let echo = String::from_utf8_lossy(&out.stdout);
    assert!(echo.contains("node_count = 7"), "{echo}");
    assert!(echo.contains("initial_rate = 2.5"), "{echo}");
    // Defaults are spelled out too, so the echo is the complete effective config.
    assert!(echo.contains("user_count = 100"), "{echo}");
    assert!(echo.contains("[controller]"), "{echo}");
}

#[test]
fn compare_prints_one_row_per_policy() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL_CONFIG);
    let out = unim(
        tmp.path(),
        &["compare", "--config", &cfg, "--runs", "1", "--seed", "2", "--out", "cmp"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    for policy in ["urns", "rbns", "dbns", "dbns-plus"] {
        assert!(
            stdout.lines().any(|l| l.starts_with(policy)),
            "no row for {policy} in:\n{stdout}"
        );
    }
    let rows: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(tmp.path().join("cmp/compare.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 4);
}

#[test]
fn out_dir_falls_back_to_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL_CONFIG);
    let out = Command::new(env!("CARGO_BIN_EXE_unim"))
        .current_dir(tmp.path())
        .env("UNIM_OUT_DIR", "from_env")
        .args(["run", "--config", &cfg, "--runs", "1"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(tmp.path().join("from_env/summary.json").is_file());
}
