use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

use serde_json::Value;

fn corpus(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(format!("{name}.slog"))
}

fn rq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rq-solve")).args(args).output().unwrap()
}

fn rq_file(args: &[&str], name: &str) -> Output {
    let path = corpus(name);
    let mut all = args.to_vec();
    all.push(path.to_str().unwrap());
    rq(&all)
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn exit_codes_follow_the_verdict() {
    assert_eq!(rq_file(&["solve"], "ex1_min").status.code(), Some(0));
    assert_eq!(rq_file(&["solve"], "ex1_min_unsat").status.code(), Some(1));
    assert_eq!(rq_file(&["solve", "--max-steps", "10"], "ex_undec").status.code(), Some(2));
    assert_eq!(rq(&["solve", "/no/such/file.slog"]).status.code(), Some(3));
}

#[test]
fn sat_answer_in_text() {
    let out = stdout(&rq_file(&["solve"], "ex1_min"));
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("sat"));
    assert!(out.contains("S = {}"), "{out}");
}

#[test]
fn json_report() {
    let j = json(&rq_file(&["solve", "--json"], "ex1_min_unsat"));
    assert_eq!(j["verdict"], "unsat");
    assert_eq!(j["fragment"], "PhiForall");
    let j = json(&rq_file(&["solve", "--json"], "ex1_min"));
    assert_eq!(j["verdict"], "sat");
    assert_eq!(j["answers"].as_array().unwrap().len(), 1);
    assert_eq!(j["answers"][0]["valuation"]["S"], "{}");
    let j = json(&rq_file(&["solve", "--json", "--max-steps", "10"], "ex_undec"));
    assert_eq!(j["verdict"], "unknown");
    assert!(j["reason"].as_str().unwrap().contains("budget"));
}

#[test]
fn trace_is_deterministic() {
    let a = rq_file(&["trace"], "nested_foreach");
    let b = rq_file(&["trace"], "nested_foreach");
    assert_eq!(a.stdout, b.stdout);
    let out = stdout(&a);
    let rules: Vec<&str> = out.lines().filter(|l| l.starts_with('(')).map(|l| l.split(' ').next().unwrap()).collect();
    assert_eq!(rules, ["(2)", "(2)"]);
}

#[test]
fn classify_prints_the_loop() {
    let o = rq_file(&["classify"], "ex_undec");
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.starts_with("fragment: Outside"), "{out}");
    assert!(out.contains("loop: ((1,1),(forall,A)) -> ((1,2),(exists,A))"), "{out}");
    let j = json(&rq_file(&["classify", "--json"], "ex_undec"));
    assert_eq!(j["branches"][0]["loop"].as_array().unwrap().len(), 2);
}

#[test]
fn prove_reports_proof_or_counterexample() {
    let o = rq_file(&["prove"], "addusr_fixed");
    assert_eq!((o.status.code(), stdout(&o).trim()), (Some(1), "proved"));
    let o = rq_file(&["prove", "--json"], "addusr_bad");
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["result"], "counterexample");
}

#[test]
fn reads_standard_input() {
    let mut child = Command::new(env!("CARGO_BIN_EXE_rq-solve"))
        .args(["solve", "--theory", "eq", "-"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(b"X in {a / A} & X neq a.").unwrap();
    let o = child.wait_with_output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("sat"));
}

#[test]
fn syntax_errors_exit_with_three() {
    let mut child = Command::new(env!("CARGO_BIN_EXE_rq-solve"))
        .args(["solve", "-"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(b"foo(").unwrap();
    let o = child.wait_with_output().unwrap();
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
}

#[test]
fn enumerate_lists_every_answer() {
    let j = json(&rq_file(&["enumerate", "--json"], "set_absorption"));
    assert_eq!(j["verdict"], "sat");
    assert!(!j["answers"].as_array().unwrap().is_empty());
}
