//! End-to-end runs of the `kcit` binary: reports validate against the JSON
//! schema and failures map to their documented exit codes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn kcit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kcit")).args(args).output().unwrap()
}

fn ok_json(args: &[&str]) -> Value {
    let out = kcit(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn schema() -> jsonschema::Validator {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schema/report.schema.json");
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::validator_for(&schema).unwrap()
}

fn assert_valid(v: &Value) {
    let errors: Vec<String> = schema().iter_errors(v).map(|e| format!("{} at {}", e, e.instance_path)).collect();
    assert!(errors.is_empty(), "{errors:#?}\n{v:#}");
}

fn pnl_csv(dir: &Path) -> PathBuf {
    let p = dir.join("pnl.csv");
    ok_json(&["gen", "--kind", "pnl", "--n", "120", "--cond-dim", "2", "--seed", "1", "--out", p.to_str().unwrap()]);
    p
}

fn code(args: &[&str]) -> i32 {
    kcit(args).status.code().unwrap()
}

#[test]
fn every_command_matches_schema() {
    let dir = tempfile::tempdir().unwrap();
    let pnl = pnl_csv(dir.path());
    let pnl = pnl.to_str().unwrap();
    let dag = dir.path().join("dag.csv");
    let dag = dag.to_str().unwrap();

    let gen = ok_json(&["gen", "--kind", "dag", "--n", "80", "--num-vars", "3", "--seed", "2", "--out", dag]);
    assert_valid(&gen);
    assert_eq!(gen["command"], "gen");

    let ui = ok_json(&["test-ui", pnl, "--x", "X", "--y", "Y", "--method", "both"]);
    assert_valid(&ui);
    let p = ui["result"]["report"]["p_value"].as_f64().unwrap();
    assert!(p > 0.0 && p <= 1.0);

    let ci = ok_json(&["test-ci", pnl, "--x", "X", "--y", "Y", "--z", "Z1,Z2", "--timings"]);
    assert_valid(&ci);
    assert!(ci["timings"]["total_seconds"].as_f64().unwrap() >= 0.0);

    let dot = dir.path().join("g.dot");
    let pc = ok_json(&["pc", dag, "--oracle", "pcorr", "--dot", dot.to_str().unwrap()]);
    assert_valid(&pc);
    assert!(std::fs::read_to_string(&dot).unwrap().starts_with("digraph"));

    let report = dir.path().join("cal.json");
    let out = kcit(&["calibrate", "--ns", "50", "--reps", "3", "--report", report.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("case,"));
    assert_valid(&serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap());

    let bench = dir.path().join("bench.json");
    let out = kcit(&["dag-bench", "--ns", "40", "--reps", "2", "--oracles", "pcorr", "--report", bench.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_valid(&serde_json::from_str(&std::fs::read_to_string(&bench).unwrap()).unwrap());
}

#[test]
fn schema_rejects_foreign_documents() {
    let v = schema();
    assert!(!v.is_valid(&serde_json::json!({"schema_version": 2, "command": "pc", "config": {}, "result": {}})));
    assert!(!v.is_valid(&serde_json::json!({"schema_version": 1, "command": "nope", "config": {}, "result": {}})));
}

#[test]
fn out_flag_writes_file_instead_of_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let pnl = pnl_csv(dir.path());
    let dest = dir.path().join("r.json");
    let out = kcit(&["test-ui", pnl.to_str().unwrap(), "--x", "0", "--y", "1", "--out", dest.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    assert_valid(&serde_json::from_str(&std::fs::read_to_string(dest).unwrap()).unwrap());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let pnl = pnl_csv(dir.path());
    let pnl = pnl.to_str().unwrap();
    let write = |name: &str, body: &str| {
        let p = dir.path().join(name);
        std::fs::write(&p, body).unwrap();
        p.to_str().unwrap().to_string()
    };
    let empty = write("empty.csv", "a,b\nNA,1\n");
    let short = write("short.csv", "a,b\n1,2\n");
    let ragged = write("ragged.csv", "a,b\n1,2\n3\n");

    assert_eq!(code(&["test-ui", "/no/such.csv", "--x", "a", "--y", "b"]), 3);
    assert_eq!(code(&["test-ui", pnl, "--x", "X", "--y", "nope"]), 4);
    assert_eq!(code(&["test-ui", &empty, "--x", "a", "--y", "b"]), 5);
    assert_eq!(code(&["test-ui", &short, "--x", "a", "--y", "b"]), 6);
    assert_eq!(code(&["test-ui", &ragged, "--x", "a", "--y", "b"]), 6);
    assert_eq!(code(&["test-ci", pnl, "--x", "X", "--y", "X", "--z", "Z1"]), 7);
    assert_eq!(code(&["test-ui", pnl, "--x", "X", "--y", "Y", "--alpha", "1.5"]), 7);
    assert_eq!(code(&["test-ui", pnl, "--x", "X"]), 2);
    assert_eq!(code(&["frobnicate"]), 2);
    assert_eq!(code(&["test-ui", pnl, "--x", "X", "--y", "Y", "--mc-draws", "5"]), 7);
}

#[test]
fn errors_go_to_stderr() {
    let out = kcit(&["pc", "/no/such.csv"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(out.stdout.is_empty());
    assert!(!out.stderr.is_empty());
}
