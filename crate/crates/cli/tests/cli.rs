//! End-to-end runs of the binary over its documented surface.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_f2sketch"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn temp_path(name: &str) -> PathBuf {
    let mut p = std::env::temp_dir();
    p.push(format!("f2sketch-test-{}-{name}", std::process::id()));
    p
}

#[test]
fn dim_of_recursive_majority() {
    let out = run(&["dim", "--fn", "maj3k:1"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).lines().next(), Some("3"));
}

#[test]
fn profile_of_parity_jumps_at_one() {
    let out = run(&["--json", "profile", "--fn", "parity:5"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["dims"][0]["d"], 1);
    assert_eq!(v["dims"][0]["w_d"], "1");
    assert_eq!(v["dims"][0]["gap"], "1");
    assert_eq!(v["dims"][1]["gap"], "0");
}

#[test]
fn spectrum_of_maj3() {
    let out = run(&["spectrum", "--fn", "maj:3"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("sparsity=4"));
    assert!(text.contains("100 c=4 coeff=1/2"));
    assert!(text.contains("111 c=-4 coeff=-1/2"));
}

#[test]
fn json_output_is_byte_identical_across_runs() {
    let a = run(&["--json", "--seed", "9", "profile", "--fn", "maj3k:1"]);
    let b = run(&["--json", "--seed", "9", "profile", "--fn", "maj3k:1"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    // Worker count must not change the bytes either.
    let c = run(&["--json", "--seed", "9", "--workers", "1", "profile", "--fn", "maj3k:1"]);
    assert_eq!(a.stdout, c.stdout);
}

#[test]
fn sketch_build_eval_round_trip() {
    let path = temp_path("det.json");
    let out = run(&[
        "sketch", "build", "--kind", "det", "--fn", "maj:3", "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let out = run(&[
        "sketch", "eval", "--scheme", path.to_str().unwrap(), "--fn", "maj:3", "--mode", "exact",
    ]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("uniform-avg=0"));
    std::fs::remove_file(&path).ok();
}

#[test]
fn sketch_parity_monte_eval() {
    let path = temp_path("parity.json");
    let out = run(&[
        "--seed", "5", "sketch", "build", "--kind", "parity", "--fn", "hamge:8:7", "--delta",
        "1/8", "--out", path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let out = run(&[
        "--seed", "5", "--json", "sketch", "eval", "--scheme", path.to_str().unwrap(), "--fn",
        "hamge:8:7", "--mode", "monte:300",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["trials"], 300);
    std::fs::remove_file(&path).ok();
}

#[test]
fn sketch_ltf_build_reports_width() {
    let path = temp_path("ltf.json");
    let out = run(&[
        "--json", "sketch", "build", "--kind", "ltf", "--fn", "hamge:64:4", "--delta", "0.1",
        "--out", path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(v["k"].as_u64().unwrap() <= 64);
    std::fs::remove_file(&path).ok();
}

#[test]
fn comm_onebit_uniform_parity_is_free() {
    let out = run(&["comm", "onebit", "--fn", "parity:3", "--dist", "uniform"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("error=0 "));
}

#[test]
fn comm_onebit_planted_distribution() {
    let out = run(&["--json", "comm", "onebit", "--fn", "maj:3", "--dist", "sec7"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_ne!(v["error"], "0");
}

#[test]
fn stream_gen_run_kernel_round_trip() {
    let stream_path = temp_path("stream.txt");
    let scheme_path = temp_path("stream-scheme.json");
    let out = run(&[
        "--seed", "3", "stream", "gen", "--model", "2", "--n", "6", "--len", "40", "--out",
        stream_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let out = run(&[
        "sketch", "build", "--kind", "det", "--fn", "parity:6", "--out",
        scheme_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let out = run(&[
        "--json", "stream", "run", "--algo", scheme_path.to_str().unwrap(), "--stream",
        stream_path.to_str().unwrap(), "--fn", "parity:6",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["output"], v["truth"]);
    std::fs::remove_file(&stream_path).ok();
    std::fs::remove_file(&scheme_path).ok();
}

#[test]
fn check_list_and_fast_check() {
    let out = run(&["check", "list"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("recmaj-4d-over-n"));
    let out = run(&["check", "recmaj-4d-over-n", "--k", "1"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("PASS: recmaj-4d-over-n"));
}

#[test]
fn exit_codes() {
    // Unknown subcommand: clap validation, exit 2.
    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    // Unknown builtin: validation, exit 2.
    let out = run(&["dim", "--fn", "nope:9"]);
    assert_eq!(out.status.code(), Some(2));
    // Spectral span too wide for exhaustive search: cap, exit 3.
    let out = run(&["profile", "--fn", "random:15:0.5:1"]);
    assert_eq!(out.status.code(), Some(3));
    // Malformed file: validation, exit 2, message cites the line.
    let path = temp_path("malformed.tt");
    std::fs::write(&path, "n=3\n01\n").unwrap();
    let out = run(&["dim", "--fn", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
    std::fs::remove_file(&path).ok();
}

#[test]
fn version_lists_format_versions() {
    let out = run(&["--version"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("scheme=1"));
    assert!(text.contains("protocol=1"));
    assert!(text.contains("automaton=1"));
}

#[test]
fn truth_table_file_input() {
    let path = temp_path("fn.tt");
    std::fs::write(&path, "n=3\n00010111\n").unwrap();
    let out = run(&["dim", "--fn", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).lines().next(), Some("3"));
    std::fs::remove_file(&path).ok();
}

#[test]
fn ltf_weight_file_input() {
    let path = temp_path("weights.ltf");
    std::fs::write(&path, "theta=0.4\n0.5\n0.3\n0.15\n0.05\n").unwrap();
    let out = run(&["--json", "dim", "--fn", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = run(&[
        "sketch", "build", "--kind", "ltf", "--fn", path.to_str().unwrap(), "--delta", "1/8",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    std::fs::remove_file(&path).ok();
}

#[test]
fn caps_flag_raises_limits() {
    // Default one-bit cap is n <= 4; n = 5 fails with a cap error.
    let out = run(&["comm", "onebit", "--fn", "maj:5"]);
    assert_eq!(out.status.code(), Some(3));
    // Raised via --caps (search is 2^32 messages; just verify acceptance of
    // the flag on a smaller raise).
    let out = run(&["--caps", "onebit-arity=3", "comm", "onebit", "--fn", "maj:3"]);
    assert!(out.status.success());
    let out = run(&["--caps", "bogus=1", "dim", "--fn", "maj:3"]);
    assert_eq!(out.status.code(), Some(2));
}
