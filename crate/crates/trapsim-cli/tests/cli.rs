//! End-to-end tests of the `trapsim` binary: argument handling, artifact
//! layout, exit codes, and byte-level reproducibility.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn trapsim(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trapsim"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary should launch")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// A fast transverse scenario used where the shipped two-hour campaigns
/// would be needlessly slow.
const SHORT_SCENARIO: &str = r#"
name = "short_transverse"
kind = "transverse"
seed = 3
duration_s = 40.0

[noise]
white_ppm = 0.3
random_walk_ppm = 1.0
"#;

#[test]
fn list_scenarios_names_every_shipped_campaign() {
    let dir = tempfile::tempdir().unwrap();
    let out = trapsim(&["list-scenarios"], dir.path());
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    for name in [
        "single_ion_transverse_locked",
        "single_ion_transverse_unlocked",
        "axial_unlocked",
        "zz_mode_4ion_56khz",
        "temperature_ramp_lock_limit",
        "decoherence_vs_zz_frequency",
    ] {
        assert!(text.contains(name), "missing {name} in:\n{text}");
    }
}

#[test]
fn validate_reports_shipped_scenarios_as_ok() {
    let dir = tempfile::tempdir().unwrap();
    let out = trapsim(&["validate", "zz_mode_4ion_56khz"], dir.path());
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    assert!(stdout(&out).starts_with("ok: zz_mode_4ion_56khz"));
}

#[test]
fn validate_rejects_unknown_keys_with_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("typo.toml");
    fs::write(&path, SHORT_SCENARIO.replace("white_ppm", "whte_ppm")).unwrap();
    let out = trapsim(&["validate", path.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(1), "stderr: {}", stderr(&out));
    assert!(stderr(&out).contains("error"));
}

#[test]
fn unknown_scenario_name_fails_with_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = trapsim(&["run", "no_such_campaign"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("neither a shipped scenario"));
}

#[test]
fn run_produces_the_expected_artifact_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("short.toml");
    fs::write(&path, SHORT_SCENARIO).unwrap();
    let out = trapsim(
        &["run", path.to_str().unwrap(), "--out-dir", "runs"],
        dir.path(),
    );
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let bundle = dir.path().join("runs/short_transverse");
    for file in [
        "manifest.toml",
        "report.txt",
        "loop_trace.csv",
        "tracker_transverse_com.csv",
        "adev_transverse_com.csv",
    ] {
        assert!(bundle.join(file).exists(), "missing {file}");
    }
    let text = stdout(&out);
    assert!(text.contains("scenario short_transverse"));
    assert!(text.contains("artifacts:"));
}

#[test]
fn rerunning_the_same_scenario_reproduces_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("short.toml");
    fs::write(&path, SHORT_SCENARIO).unwrap();
    for out_dir in ["a", "b"] {
        let out = trapsim(
            &["run", path.to_str().unwrap(), "--out-dir", out_dir],
            dir.path(),
        );
        assert!(out.status.success(), "stderr: {}", stderr(&out));
    }
    for file in [
        "loop_trace.csv",
        "tracker_transverse_com.csv",
        "manifest.toml",
        "report.txt",
    ] {
        let a = fs::read(dir.path().join("a/short_transverse").join(file)).unwrap();
        let b = fs::read(dir.path().join("b/short_transverse").join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between identical runs");
    }
}

#[test]
fn seed_override_changes_the_trace_and_lands_in_the_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("short.toml");
    fs::write(&path, SHORT_SCENARIO).unwrap();
    let base = trapsim(
        &["run", path.to_str().unwrap(), "--out-dir", "a"],
        dir.path(),
    );
    assert!(base.status.success());
    let reseeded = trapsim(
        &["run", path.to_str().unwrap(), "--out-dir", "b", "--seed", "99"],
        dir.path(),
    );
    assert!(reseeded.status.success());
    let manifest =
        fs::read_to_string(dir.path().join("b/short_transverse/manifest.toml")).unwrap();
    assert!(manifest.contains("seed = 99"), "manifest:\n{manifest}");
    let a = fs::read(dir.path().join("a/short_transverse/loop_trace.csv")).unwrap();
    let b = fs::read(dir.path().join("b/short_transverse/loop_trace.csv")).unwrap();
    assert_ne!(a, b, "a different seed should change the recorded trace");
}

#[test]
fn duration_override_is_applied_before_validation() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("short.toml");
    fs::write(&path, SHORT_SCENARIO).unwrap();
    let out = trapsim(
        &[
            "run",
            path.to_str().unwrap(),
            "--out-dir",
            "runs",
            "--duration",
            "25",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("25 s simulated"));
}

#[test]
fn missed_expectation_exits_with_code_three() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("strict.toml");
    let config = format!(
        "{SHORT_SCENARIO}\n[[expect]]\nadev = {{ tau_s = 10.0, max_ppm = 1e-6 }}\n"
    );
    fs::write(&path, config).unwrap();
    let out = trapsim(
        &["run", path.to_str().unwrap(), "--out-dir", "runs"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3), "stdout: {}", stdout(&out));
    assert!(stdout(&out).contains("FAIL"));
}

#[test]
fn duplicate_scenario_names_in_one_invocation_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("short.toml");
    fs::write(&path, SHORT_SCENARIO).unwrap();
    let arg = path.to_str().unwrap();
    let out = trapsim(&["run", arg, arg, "--out-dir", "runs"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("appears twice"));
}

#[test]
fn adev_summarizes_a_tracker_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("short.toml");
    fs::write(&path, SHORT_SCENARIO).unwrap();
    let run = trapsim(
        &["run", path.to_str().unwrap(), "--out-dir", "runs"],
        dir.path(),
    );
    assert!(run.status.success());
    let tracker = dir
        .path()
        .join("runs/short_transverse/tracker_transverse_com.csv");
    let out = trapsim(&["adev", tracker.to_str().unwrap()], dir.path());
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let table = stdout(&out);
    assert!(table.starts_with("tau_s,"), "table:\n{table}");
    assert!(table.lines().count() > 2, "table:\n{table}");
    assert!(stderr(&out).contains('#'), "summary should go to stderr");
}

#[test]
fn adev_mode_fractional_rescales_the_deviation() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.csv");
    let mut csv = String::from("t_s,f_hz\n");
    for i in 0..200 {
        let value = 1000.0 + if i % 2 == 0 { 0.5 } else { -0.5 };
        csv.push_str(&format!("{},{}\n", i as f64 * 0.5, value));
    }
    fs::write(&path, csv).unwrap();
    let absolute = trapsim(&["adev", path.to_str().unwrap()], dir.path());
    let fractional = trapsim(
        &["adev", path.to_str().unwrap(), "--mode", "fractional"],
        dir.path(),
    );
    assert!(absolute.status.success());
    assert!(fractional.status.success());
    let first_sigma = |text: &str| -> f64 {
        text.lines()
            .nth(1)
            .unwrap()
            .split(',')
            .nth(1)
            .unwrap()
            .parse()
            .unwrap()
    };
    let abs_sigma = first_sigma(&stdout(&absolute));
    let frac_sigma = first_sigma(&stdout(&fractional));
    let ratio = abs_sigma / frac_sigma;
    assert!(
        (ratio - 1000.0).abs() / 1000.0 < 1e-9,
        "expected fractional = absolute / mean, got ratio {ratio}"
    );
}

#[test]
fn adev_rejects_a_missing_column_by_name() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.csv");
    fs::write(&path, "t_s,f_hz\n0,1\n1,2\n2,3\n").unwrap();
    let out = trapsim(
        &["adev", path.to_str().unwrap(), "--column", "nope"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("not found"));
}
