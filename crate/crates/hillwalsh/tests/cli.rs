//! End-to-end checks of the command-line surface: flags, exit codes, file
//! formats, and the machine-parseable error contract.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hillwalsh"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn delta_free_particle() {
    let out = run(&[
        "delta",
        "--alpha",
        "0",
        "--beta",
        "0",
        "--tau",
        "6.2831853",
        "--excitation",
        "cos",
        "-k",
        "12",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("method=recursive k=12 delta=2"), "{text}");
}

#[test]
fn delta_hyperbolic_closed_form() {
    let out = run(&["delta", "--alpha", "-1", "--beta", "0", "--tau", "1", "-k", "14"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let value: f64 = text
        .split("delta=")
        .nth(1)
        .unwrap()
        .split_whitespace()
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert!((value - 2.0 * 1.0f64.cosh()).abs() < 5e-3, "{value}");
}

#[test]
fn delta_method_all_gaps_small() {
    let out = run(&[
        "delta", "--alpha", "0.3", "--beta", "0.2", "--tau", "6.2831853", "-k", "8", "--method",
        "all",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    for line in text.lines().filter(|l| l.starts_with("gap(")) {
        let v: f64 = line.split('=').nth(1).unwrap().parse().unwrap();
        assert!(v < 1e-6, "{line}");
    }
    assert_eq!(text.lines().filter(|l| l.starts_with("method=")).count(), 3);
}

#[test]
fn delta_singularity_exit_code_and_prefix() {
    // alpha = -2^(2k+2)/tau^2 with k=9, tau=2
    let out = run(&["delta", "--alpha", "-262144", "--beta", "0", "--tau", "2", "-k", "9"]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.starts_with("error[singular]:"), "{err}");
    assert_eq!(err.lines().count(), 1);
}

#[test]
fn usage_errors_exit_two() {
    let out = run(&[
        "chart",
        "--alpha-range",
        "0:4:0",
        "--beta-range",
        "0:2:10",
        "--tau",
        "6.28",
        "--out",
        "/tmp/hillwalsh-unused",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).starts_with("error[usage]:"));

    let out = run(&["delta", "--beta", "0", "--tau", "1"]);
    assert_eq!(out.status.code(), Some(2));

    let out = run(&["chart", "--beta-range", "0:1:5", "--tau", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_emits_grid_csv() {
    let out = run(&[
        "sweep",
        "--alpha-range",
        "0:1:5",
        "--beta",
        "0",
        "--tau",
        "6.283185307179586",
        "-k",
        "10",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "alpha,beta,delta,class");
    assert_eq!(lines.len(), 6);
    assert!(lines[1].starts_with("0,0,2,"));
}

#[test]
fn table_excitation_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("meissner.txt");
    let mut rows = String::new();
    for i in 0..8 {
        rows.push_str(if i < 4 { "1.0\n" } else { "-1.0\n" });
    }
    std::fs::write(&path, rows).unwrap();
    let spec = format!("table:{}", path.display());
    let out = run(&[
        "delta", "--alpha", "1", "--beta", "0.5", "--tau", "6.283185307179586", "-k", "12",
        "--excitation", &spec,
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    // step table equals the square wave with duty 0.5
    let out2 = run(&[
        "delta", "--alpha", "1", "--beta", "0.5", "--tau", "6.283185307179586", "-k", "12",
        "--excitation", "square:1,-1,0.5",
    ]);
    assert_eq!(stdout(&out), stdout(&out2));

    // a non-power-of-two table is rejected
    std::fs::write(&path, "1\n2\n3\n").unwrap();
    let out = run(&["delta", "--alpha", "1", "--beta", "0.5", "--tau", "1", "--excitation", &spec]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).starts_with("error[size]:"));
}

#[test]
fn config_file_defaults_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(
        &cfg,
        r#"{"alpha": 0.0, "beta": 0.0, "tau": 1.0, "k": 10, "excitation": "cos"}"#,
    )
    .unwrap();
    let out = run(&["delta", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("delta=2"));

    // flag overrides the file
    let out = run(&[
        "delta",
        "--config",
        cfg.to_str().unwrap(),
        "--alpha",
        "-1",
        "-k",
        "14",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let value: f64 = text
        .split("delta=")
        .nth(1)
        .unwrap()
        .trim()
        .parse()
        .unwrap();
    assert!((value - 2.0 * 1.0f64.cosh()).abs() < 5e-3);
}

#[test]
fn interlace_json_output() {
    let out = run(&[
        "interlace",
        "--beta",
        "0.5",
        "--alpha-range",
        "-1:1.5",
        "--tau",
        "6.283185307179586",
        "-k",
        "12",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["ordering_ok"], serde_json::Value::Bool(true));
    assert!(v["lambdas"].as_array().unwrap().len() >= 2);
    assert!(v["intervals"].as_array().unwrap().len() >= 3);
}

#[test]
fn chart_files_and_worker_env() {
    let dir = tempfile::tempdir().unwrap();
    let out_flag = dir.path().join("flag");
    let out_env = dir.path().join("env");
    let args = |out: &Path| {
        vec![
            "chart".to_string(),
            "--alpha-range".into(),
            "0:2:40".into(),
            "--beta-range".into(),
            "0:1:20".into(),
            "--tau".into(),
            "6.283185307179586".into(),
            "-k".into(),
            "8".into(),
            "--out".into(),
            out.display().to_string(),
        ]
    };
    let s1 = bin()
        .args(args(&out_flag))
        .args(["--workers", "2"])
        .status()
        .unwrap();
    assert!(s1.success());
    let s2 = bin()
        .args(args(&out_env))
        .env("HILLWALSH_WORKERS", "7")
        .status()
        .unwrap();
    assert!(s2.success());
    for name in ["grid.csv", "chart.pgm", "curves.csv"] {
        let a = std::fs::read(out_flag.join(name)).unwrap();
        let b = std::fs::read(out_env.join(name)).unwrap();
        assert!(!a.is_empty());
        assert_eq!(a, b, "{name} differs between worker counts");
    }
    // pgm header sanity
    let pgm = std::fs::read_to_string(out_flag.join("chart.pgm")).unwrap();
    let mut lines = pgm.lines();
    assert_eq!(lines.next(), Some("P2"));
    assert_eq!(lines.next(), Some("40 20"));
    assert_eq!(lines.next(), Some("255"));
}

#[test]
fn validate_negative_control_fails_loudly() {
    let out = run(&["validate", "--inject-scale-bug"]);
    assert_eq!(out.status.code(), Some(1));
    let text = stdout(&out);
    assert!(text.contains("FAIL path-equivalence-triangular"), "{text}");
    assert!(stderr(&out).contains("worst offender"));
}
