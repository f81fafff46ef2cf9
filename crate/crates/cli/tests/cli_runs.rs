//! End-to-end runs of the `qcausal` binary.

use std::io::Write;
use std::process::{Command, Output};

use serde_json::Value;

fn qcausal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qcausal")).args(args).output().expect("binary runs")
}

fn machine(args: &[&str]) -> (Value, i32) {
    let mut all = args.to_vec();
    all.extend(["--format", "machine"]);
    let out = qcausal(&all);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("bad report ({e}): {}", String::from_utf8_lossy(&out.stderr))
    });
    (v, out.status.code().unwrap())
}

fn spec_file(text: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(text.as_bytes()).unwrap();
    f
}

#[test]
fn verify_theorem_exit_codes() {
    let (v, code) = machine(&["verify-theorem", "--preset", "tensor-qubits"]);
    assert_eq!(code, 0);
    assert_eq!(v["result"]["conclusion"], "locality_verified");
    let (v, code) = machine(&["verify-theorem", "--preset", "qubit-clash"]);
    assert_eq!(code, 1);
    assert_eq!(v["result"]["conclusion"], "obstruction_found");
    assert!(v["result"]["max_sector_residual"].as_f64().unwrap() >= 0.24);
}

#[test]
fn causality_measure_on_the_clash() {
    let (v, code) = machine(&["causality-measure", "--preset", "qubit-clash"]);
    assert_eq!(code, 0);
    let c = v["result"]["c_value"].as_f64().unwrap();
    assert!((c - 0.25).abs() <= 0.01, "{c}");
}

#[test]
fn report_layout() {
    let (v, _) = machine(&["generate", "--preset", "block-mixed"]);
    let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(keys.first(), Some(&"format_version"));
    assert_eq!(keys.last(), Some(&"timing_ms"));
    assert_eq!(v["format_version"], 1);
    assert_eq!(v["dimensions"]["joint"], 20);
    assert_eq!(v["dimensions"]["center"], 2);
    assert_eq!(v["tool"], "qcausal");
}

#[test]
fn every_command_runs() {
    for cmd in ["generate", "commutant", "center", "meet", "total-coincidence", "correlation", "causality-measure", "verify-theorem", "chsh"] {
        let out = qcausal(&[cmd, "--preset", "pauli-chsh", "--starts", "2", "--pairs", "16"]);
        assert_eq!(out.status.code(), Some(0), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(String::from_utf8_lossy(&out.stdout).contains("timing_ms:"));
    }
}

#[test]
fn text_and_machine_carry_the_same_numbers() {
    let (v, _) = machine(&["correlation", "--preset", "qubit-clash", "--seed", "5"]);
    let text = String::from_utf8(qcausal(&["correlation", "--preset", "qubit-clash", "--seed", "5"]).stdout).unwrap();
    let c = &v["result"]["correlation"]["c_omega"];
    assert!(text.contains(&format!("c_omega: {c}")), "{c} not in {text}");
}

#[test]
fn input_errors_exit_2() {
    let bad = spec_file(
        r#"{"format_version": 1, "dim": 3,
            "a": {"generators": [[[[1,0],[0,0]], [[0,0],[1,0]], [[0,0],[0,0]]]]},
            "b": {"preset": "qubit-clash"}}"#,
    );
    let out = qcausal(&["generate", "--spec", bad.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("matrix not square"));
    assert!(out.stdout.is_empty());

    let out = qcausal(&["generate", "--spec", "/nonexistent/spec.json"]);
    assert_eq!(out.status.code(), Some(2));
    let out = qcausal(&["chsh", "--preset", "qubit-clash"]);
    assert_eq!(out.status.code(), Some(2));
    let out = qcausal(&["frobnicate", "--preset", "qubit-clash"]);
    assert_eq!(out.status.code(), Some(2));
    let out = qcausal(&["causality-measure", "--preset", "block-mixed", "--sector", "7"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unconverged_meet_exits_3() {
    // two lines at a small angle converge slowly
    let spec = spec_file(
        r#"{"format_version": 1, "dim": 2,
            "a": {"generators": [[[[1,0],[0,0]], [[0,0],[0,0]]]]},
            "b": {"generators": [[[[0.9,0],[0.3,0]], [[0.3,0],[0.1,0]]]]},
            "pair": {"e": [[[1,0],[0,0]], [[0,0],[0,0]]], "f": [[[0.9,0],[0.3,0]], [[0.3,0],[0.1,0]]]}}"#,
    );
    let path = spec.path().to_str().unwrap();
    let (v, code) = machine(&["meet", "--spec", path, "--max-iter", "3"]);
    assert_eq!(code, 3);
    assert_eq!(v["result"]["iterative"]["converged"], false);
    let (v, code) = machine(&["meet", "--spec", path]);
    assert_eq!(code, 0);
    assert_eq!(v["result"]["spectral"]["meet"]["rank"], 0);
}

#[test]
fn spec_file_matches_preset() {
    let spec = spec_file(r#"{"format_version": 1, "preset": "qubit-clash", "seed": 4}"#);
    let (a, _) = machine(&["correlation", "--spec", spec.path().to_str().unwrap()]);
    let (b, _) = machine(&["correlation", "--preset", "qubit-clash", "--seed", "4"]);
    assert_eq!(a["result"], b["result"]);
}

#[test]
fn sector_flag_restricts_the_theorem() {
    let (v, code) = machine(&["verify-theorem", "--preset", "block-mixed"]);
    assert_eq!(code, 1);
    assert_eq!(v["result"]["obstructed_sector"], 1);
    let (v, code) = machine(&["verify-theorem", "--preset", "block-mixed", "--sector", "0"]);
    assert_eq!(code, 0);
    assert_eq!(v["result"]["sectors"].as_array().unwrap().len(), 1);
}
