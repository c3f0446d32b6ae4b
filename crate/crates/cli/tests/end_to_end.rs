//! Drives the installed binary as a subprocess: argument handling, exit
//! codes, and output files.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn thermotop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_thermotop"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, contents: &str) -> String {
    let path = dir.join("config.json");
    fs::write(&path, contents).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn simulate_succeeds_and_writes_the_csv() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), r#"{"steps": 5}"#);
    let out = dir.path().join("run.csv");
    let result = thermotop(&[
        "simulate",
        "--config",
        &config,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(result.status.success(), "{result:?}");
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 7);
    assert!(text.starts_with("step,t,omega_x"));
}

#[test]
fn method_flag_overrides_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), r#"{"steps": 5, "method": "vi"}"#);
    let out = dir.path().join("rk4.csv");
    let result = thermotop(&[
        "simulate",
        "--config",
        &config,
        "--out",
        out.to_str().unwrap(),
        "--method",
        "rk4",
    ]);
    assert!(result.status.success());
    let text = fs::read_to_string(&out).unwrap();
    // Explicit methods leave the solver columns empty.
    let last = text.lines().last().unwrap();
    assert!(last.ends_with(",,"), "{last}");
}

#[test]
fn invalid_config_exits_with_the_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), r#"{"steps": 0}"#);
    let result = thermotop(&["simulate", "--config", &config, "--out", "/dev/null"]);
    assert_eq!(result.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&result.stderr).contains("steps"));
}

#[test]
fn unknown_config_key_exits_with_the_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), r#"{"stepz": 7}"#);
    let result = thermotop(&["simulate", "--config", &config, "--out", "/dev/null"]);
    assert_eq!(result.status.code(), Some(2));
}

#[test]
fn missing_config_file_exits_with_the_io_code() {
    let result = thermotop(&[
        "simulate",
        "--config",
        "/nonexistent.json",
        "--out",
        "/dev/null",
    ]);
    assert_eq!(result.status.code(), Some(1));
}

#[test]
fn failed_solver_exits_with_the_solver_code() {
    let dir = tempfile::tempdir().unwrap();
    // One Newton iteration cannot reach the tight tolerance.
    let config = write_config(
        dir.path(),
        r#"{"steps": 5, "solver": {"max_iterations": 1, "newton_tol": 1e-14}}"#,
    );
    let result = thermotop(&["simulate", "--config", &config, "--out", "/dev/null"]);
    assert_eq!(result.status.code(), Some(3));
}

#[test]
fn check_reports_failure_with_its_own_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        r#"{"steps": 50, "solver": {"newton_tol": 1e-2}}"#,
    );
    let result = thermotop(&["check", "--config", &config]);
    assert_eq!(result.status.code(), Some(4));
    let stdout = String::from_utf8_lossy(&result.stdout);
    assert!(stdout.contains("momentum-identity"), "{stdout}");
}

#[test]
fn check_passes_on_the_default_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), r#"{"steps": 50}"#);
    let result = thermotop(&["check", "--config", &config]);
    assert!(result.status.success(), "{result:?}");
}

#[test]
fn plot_draws_requested_fields_from_a_simulated_csv() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), r#"{"steps": 10}"#);
    let csv = dir.path().join("run.csv");
    let svg = dir.path().join("energy.svg");
    assert!(thermotop(&[
        "simulate",
        "--config",
        &config,
        "--out",
        csv.to_str().unwrap()
    ])
    .status
    .success());
    let result = thermotop(&[
        "plot",
        "--in",
        csv.to_str().unwrap(),
        "--fields",
        "e_kin,e_pot,e_total",
        "--out",
        svg.to_str().unwrap(),
    ]);
    assert!(result.status.success(), "{result:?}");
    let text = fs::read_to_string(&svg).unwrap();
    assert_eq!(text.matches("<polyline").count(), 3);
}

#[test]
fn plot_missing_column_exits_with_the_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("d.csv");
    fs::write(&csv, "t,a\n0,1\n1,2\n").unwrap();
    let result = thermotop(&[
        "plot",
        "--in",
        csv.to_str().unwrap(),
        "--fields",
        "missing",
        "--out",
        dir.path().join("p.svg").to_str().unwrap(),
    ]);
    assert_eq!(result.status.code(), Some(2));
}

#[test]
fn simulate_is_byte_deterministic_across_invocations() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), r#"{"steps": 20}"#);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        assert!(thermotop(&[
            "simulate",
            "--config",
            &config,
            "--out",
            out.to_str().unwrap()
        ])
        .status
        .success());
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}
