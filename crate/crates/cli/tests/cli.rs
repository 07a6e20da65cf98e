//! Black-box tests of the `smale` binary: exit codes, artifact layout,
//! determinism, and diagnostics.

use std::path::Path;
use std::process::{Command, Output};

fn smale(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_smale"))
        .args(args)
        .current_dir(dir)
        .env_remove("SMALE_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, contents: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path.to_str().unwrap().to_string()
}

const SEGMENT_CONFIG: &str = r#"
    horizon = 20000
    checks = ["prop23_bound", "segment_limit"]

    [game]
    preset = "example42"

    [[plans]]
    kind = "allc"

    [[plans]]
    kind = "smale"
    line = { diagonal = true }

    [[plans]]
    kind = "alld"
"#;

#[test]
fn validate_reports_the_resolved_experiment() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "config.toml", SEGMENT_CONFIG);
    let out = smale(&["validate", &config], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("valid"));
    assert!(stdout.contains("threshold rule on the diagonal"));
    assert!(stdout.contains("prop23_bound, segment_limit"));
    // Validation must not create artifacts.
    assert!(std::fs::read_dir(dir.path()).unwrap().count() == 1);
}

#[test]
fn run_writes_artifacts_and_passes() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "config.toml", SEGMENT_CONFIG);
    let out = smale(&["run", &config, "--out", "artifacts"], dir.path());
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("overall: PASS"));
    for name in ["trajectory.csv", "report.txt", "summary.json"] {
        assert!(dir.path().join("artifacts").join(name).exists(), "{name} missing");
    }
    let csv = std::fs::read_to_string(dir.path().join("artifacts/trajectory.csv")).unwrap();
    assert!(csv.starts_with("round, s_1, s_2, s_3, pi_mean\n"));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "config.toml", SEGMENT_CONFIG);
    smale(&["run", &config, "--out", "a"], dir.path());
    smale(&["run", &config, "--out", "b"], dir.path());
    for name in ["trajectory.csv", "summary.json", "report.txt"] {
        assert_eq!(
            std::fs::read(dir.path().join("a").join(name)).unwrap(),
            std::fs::read(dir.path().join("b").join(name)).unwrap(),
            "{name} differs between identical runs"
        );
    }
}

#[test]
fn failing_checks_exit_one_but_still_write_artifacts() {
    // Slope 1/4 keeps the segment shape valid but puts the predicted point
    // outside the defection segment, which the segment check reports as a
    // failure.
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "config.toml",
        r#"
        horizon = 2000
        checks = ["segment_limit"]
        [game]
        staircase = 3
        [[plans]]
        kind = "allc"
        [[plans]]
        kind = "smale"
        line = { slope = "1/4", through_pn = true }
        [[plans]]
        kind = "alld"
        "#,
    );
    let out = smale(&["run", &config, "--out", "artifacts"], dir.path());
    assert_eq!(out.status.code(), Some(1), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("overall: FAIL"));
    assert!(dir.path().join("artifacts/summary.json").exists());
}

#[test]
fn invalid_configs_exit_two_without_artifacts() {
    let dir = tempfile::tempdir().unwrap();

    // Structural: plan count does not match the game.
    let structural = write(
        dir.path(),
        "structural.toml",
        "horizon = 5\n[game]\nstaircase = 4\n[[plans]]\nkind = \"allc\"\n",
    );
    let out = smale(&["run", &structural, "--out", "s"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("4 players"), "stderr: {stderr}");
    assert!(!dir.path().join("s").exists(), "no artifacts on config error");

    // Game axioms: cooperator payoffs must increase.
    let axioms = write(
        dir.path(),
        "axioms.toml",
        r#"
        horizon = 5
        [game]
        n = 2
        coop_payoffs = [3, 0]
        defect_payoffs = [1, 5]
        [[plans]]
        kind = "allc"
        [[plans]]
        kind = "alld"
        "#,
    );
    let out = smale(&["run", &axioms, "--out", "a"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(
        stderr.contains("increase") || stderr.contains("axiom"),
        "axiom diagnostics should name the violation, got: {stderr}"
    );
    assert!(!dir.path().join("a").exists());

    // Infeasible check request.
    let infeasible = write(
        dir.path(),
        "infeasible.toml",
        r#"
        horizon = 5
        checks = ["cor33_limit"]
        [game]
        staircase = 3
        [[plans]]
        kind = "allc"
        [[plans]]
        kind = "allc"
        [[plans]]
        kind = "alld"
        "#,
    );
    let out = smale(&["validate", &infeasible], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("cor33_limit"), "stderr: {stderr}");
}

#[test]
fn sweeps_tabulate_rows_and_flag_errors() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "config.toml", SEGMENT_CONFIG);
    let out = smale(
        &[
            "sweep", &config, "--axis", "lambda", "--values", "1,9/10,bogus", "--out", "sw",
        ],
        dir.path(),
    );
    // The bogus row errors, so the sweep exits 1, but the table is complete.
    assert_eq!(out.status.code(), Some(1));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("lambda, 1, pass"));
    assert!(stdout.contains("lambda, bogus, error"));
    let csv = std::fs::read_to_string(dir.path().join("sw/sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(dir.path().join("sw/rows/row_2.json").exists());

    let empty = smale(
        &["sweep", &config, "--axis", "lambda", "--values", "", "--out", "sw2"],
        dir.path(),
    );
    assert_eq!(empty.status.code(), Some(0), "an empty grid is a success");
    let csv = std::fs::read_to_string(dir.path().join("sw2/sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1, "header-only table for an empty grid");
}

#[test]
fn out_dir_falls_back_to_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "config.toml", SEGMENT_CONFIG);
    let out = Command::new(env!("CARGO_BIN_EXE_smale"))
        .args(["run", &config])
        .current_dir(dir.path())
        .env("SMALE_OUT_DIR", dir.path().join("from-env"))
        .output()
        .expect("binary runs");
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("from-env/trajectory.csv").exists());
}
