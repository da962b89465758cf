//! End-to-end runs of the `nu-entangle` binary.

use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_nu-entangle"));
    cmd.env_remove("NU_ENTANGLE_THREADS");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

const SUBCOMMANDS: [&str; 10] = [
    "osc-prob",
    "table",
    "bell-eval",
    "bell-scan",
    "bell-optimize",
    "contamination",
    "convert",
    "source-sample",
    "smear",
    "qkd-run",
];

#[test]
fn no_arguments_prints_usage() {
    let out = run(&[]);
    assert_eq!(out.status.code(), Some(2));
    let text = String::from_utf8_lossy(&out.stderr);
    for sub in SUBCOMMANDS {
        assert!(text.contains(sub), "usage lacks {sub}");
    }
}

#[test]
fn unknown_flag_is_a_usage_error() {
    assert_eq!(run(&["bell-eval", "--bogus"]).status.code(), Some(2));
    assert_eq!(
        run(&["bell-eval", "--times", "0.1,0.2"]).status.code(),
        Some(2)
    );
}

#[test]
fn every_help_page_carries_the_energy_note() {
    for sub in std::iter::once(None).chain(SUBCOMMANDS.iter().map(Some)) {
        let mut args: Vec<&str> = sub.into_iter().copied().collect();
        args.push("--help");
        let out = run(&args);
        assert!(out.status.success());
        let text = String::from_utf8_lossy(&out.stdout);
        assert!(
            text.contains("0.106 GeV") && text.contains("0.107 GeV"),
            "{sub:?}"
        );
    }
}

#[test]
fn bell_eval_reference_point() {
    let out = run(&["bell-eval"]);
    assert!(out.status.success());
    let v = json(&out);
    let h = v["result"]["h"].as_f64().unwrap();
    assert!((h - 1.71).abs() < 0.02);
    assert_eq!(v["violation"], Value::Bool(true));
}

#[test]
fn bell_eval_undefined_ratio_exits_one() {
    let out = run(&["bell-eval", "--times", "0,0,0,0"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(json(&out)["result"]["h"].is_null());
    assert!(!out.stderr.is_empty());
}

#[test]
fn small_scan_writes_header_and_cells() {
    let out = run(&["bell-scan", "--resolution", "3"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 10);
    assert_eq!(lines[0], "axis1,axis2,h,defined");
}

#[test]
fn convert_reproduces_distance_table() {
    let v = json(&run(&[
        "convert",
        "--s",
        "0.579497",
        "--energy-gev",
        "0.106",
    ]));
    let km = v["distance_km"].as_f64().unwrap();
    assert!((km - 2418.0).abs() < 0.5, "{v}");
}

#[test]
fn key_distribution_without_eve_is_silent() {
    let out = run(&["qkd-run", "--n-pairs", "5000"]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["same_flavor_count"], 0);
    assert_eq!(v["alarm"], false);
}

#[test]
fn key_distribution_with_eve_raises_alarm() {
    let v = json(&run(&["qkd-run", "--n-pairs", "5000", "--eve-te", "0.05"]));
    assert_eq!(v["alarm"], true);
}

#[test]
fn stochastic_output_is_byte_identical_across_runs_and_threads() {
    let args = [
        "qkd-run",
        "--n-pairs",
        "3000",
        "--eve-te",
        "0.05",
        "--seed",
        "11",
    ];
    let a = run(&args);
    let b = bin()
        .args(args)
        .env("NU_ENTANGLE_THREADS", "1")
        .output()
        .unwrap();
    let c = bin()
        .args(args)
        .env("NU_ENTANGLE_THREADS", "3")
        .output()
        .unwrap();
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);

    let s1 = run(&["source-sample", "--seed", "4"]);
    let s2 = run(&["source-sample", "--seed", "4"]);
    assert!(s1.status.success());
    assert_eq!(s1.stdout, s2.stdout);
}

#[test]
fn bad_thread_count_is_a_usage_error() {
    let out = bin()
        .args(["bell-eval"])
        .env("NU_ENTANGLE_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_is_read_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    let artifact = dir.path().join("out.json");
    std::fs::write(
        &cfg,
        format!(
            r#"{{"physics": {{"dm2_32": 2.43e-3}}, "output": {{"path": {:?}}}}}"#,
            artifact
        ),
    )
    .unwrap();

    let out = run(&[
        "osc-prob",
        "--config",
        cfg.to_str().unwrap(),
        "--from",
        "mu",
        "--to",
        "mu",
        "--s",
        "0.1",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(out.stdout.is_empty());
    let from_file: Value = serde_json::from_slice(&std::fs::read(&artifact).unwrap()).unwrap();

    let artifact2 = dir.path().join("out2.json");
    let out = run(&[
        "osc-prob",
        "--config",
        cfg.to_str().unwrap(),
        "--dm2-32",
        "2.4e-3",
        "--output",
        artifact2.to_str().unwrap(),
        "--from",
        "mu",
        "--to",
        "mu",
        "--s",
        "0.1",
    ]);
    assert!(out.status.success());
    let overridden: Value = serde_json::from_slice(&std::fs::read(&artifact2).unwrap()).unwrap();
    let default = json(&run(&[
        "osc-prob", "--from", "mu", "--to", "mu", "--s", "0.1",
    ]));
    assert_eq!(overridden["probability"], default["probability"]);
    assert_ne!(from_file["probability"], default["probability"]);
}

#[test]
fn malformed_config_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"physics": {"dm2_99": 1.0}}"#).unwrap();
    let out = run(&["bell-eval", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}
