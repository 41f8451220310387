//! Command-line behavior: diagnostics, exit codes, and the full default
//! pipeline on the shipped toy profile.

use std::path::Path;
use std::time::Instant;

fn run_cli(args: &[&str], dir: &Path) -> std::process::Output {
    std::process::Command::new(env!("CARGO_BIN_EXE_fedora"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

#[test]
fn unknown_config_key_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[train]\nmoda = \"full\"\n").unwrap();
    let out = run_cli(&["gen", "--config", cfg.to_str().unwrap()], dir.path());
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("moda"), "stderr should name the key: {err}");
}

#[test]
fn missing_input_fails_with_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    // train-transform without a generated benchmark
    let out = run_cli(&["train-transform", "--out", "o"], dir.path());
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.starts_with("error:"), "one-line diagnostic expected: {err}");
}

#[test]
fn invalid_mode_flag_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_cli(&["train", "--mode", "sideways", "--out", "o"], dir.path());
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("sideways"));
}

/// The shipped toy profile runs gen -> train-transform -> train -> eval well
/// inside the five-minute budget on one core.
#[test]
fn toy_pipeline_completes_in_budget() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let repo_config = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs/toy.toml")
        .canonicalize()
        .unwrap();
    let config = repo_config.to_str().unwrap();
    for cmd in ["gen", "train-transform", "train", "eval"] {
        let t = Instant::now();
        let out = run_cli(&[cmd, "--config", config], dir.path());
        assert!(
            out.status.success(),
            "{cmd} failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        println!("  {cmd}: {:?}", t.elapsed());
    }
    let elapsed = start.elapsed();
    assert!(
        elapsed.as_secs_f64() < 300.0,
        "pipeline took {elapsed:?}, budget is 5 minutes"
    );
    // eval layout exists
    let run = dir.path().join("runs");
    assert!(run.join("reports/lodo/average.json").exists());
    assert!(run.join("run_manifest_eval.toml").exists());
    println!("pipeline completed in {elapsed:?}");
}
