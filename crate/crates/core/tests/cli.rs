use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn spec(name: &str) -> PathBuf {
    [env!("CARGO_MANIFEST_DIR"), "specs", &format!("{name}.relfix")].iter().collect()
}

fn relfix(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_relfix")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is a JSON report")
}

#[test]
fn solve_writes_hasse_diagrams() {
    let dir = tempfile::tempdir().unwrap();
    let out = relfix(&[
        "solve",
        "--spec",
        spec("lazy-nat").to_str().unwrap(),
        "--emit-dot",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["details"]["sizes"], serde_json::json!([1, 3, 5, 7, 9, 11, 13]));
    let x2 = std::fs::read_to_string(dir.path().join("X2.dot")).unwrap();
    assert_eq!(x2.lines().filter(|l| l.contains("[label=")).count(), 5);
    // Covering edges of X_2 only: ⊥ < inl, ⊥ < inr ⊥, inr ⊥ < inr inl, inr ⊥ < inr inr ⊥.
    assert_eq!(x2.lines().filter(|l| l.contains("->")).count(), 4);
}

#[test]
fn report_flag_writes_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let out = relfix(&["relate", "--spec", spec("streams").to_str().unwrap(), "--report", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(v["verdicts"]["agreement"], true);
    assert_eq!(v["config"]["depth"], 4);
}

#[test]
fn cli_flags_override_the_spec() {
    let out = relfix(&["relate", "--spec", spec("lazy-nat").to_str().unwrap(), "--depth", "2", "--seed", "9"]);
    let v = json(&out);
    assert_eq!(v["config"]["depth"], 2);
    assert_eq!(v["config"]["seed"], 9);
    assert_eq!(v["details"]["sizes"], serde_json::json!([1, 3, 5]));
}

#[test]
fn parse_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.relfix");
    std::fs::write(&bad, "domain D = fun(D)\n").unwrap();
    let out = relfix(&["solve", "--spec", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let v = json(&out);
    assert_eq!(v["error"]["kind"], "ParseError");
    assert!(v["error"]["message"].as_str().unwrap().contains("1:17"));
    let missing = relfix(&["solve", "--spec", dir.path().join("absent").to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(2));
    assert_eq!(relfix(&["solve"]).status.code(), Some(2));
}

#[test]
fn size_cap_exits_three() {
    let out = relfix(&["solve", "--spec", spec("reflexive").to_str().unwrap(), "--depth", "4"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(json(&out)["error"]["kind"], "SizeCapExceeded");
    let out = relfix(&["solve", "--spec", spec("streams").to_str().unwrap(), "--max-size", "10"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn karoubi_command() {
    let out = relfix(&["karoubi", "--poset", "chain(3)"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["details"]["ed"].as_array().unwrap().len(), 4);
    assert_eq!(v["details"]["claim_audit"]["status"], "refuted");
    let out = relfix(&["karoubi", "--poset", "chain(5)"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["details"]["claim_audit"]["fibers_skipped"], true);
    assert_eq!(relfix(&["karoubi", "--poset", "chain("]).status.code(), Some(2));
}

#[test]
fn check_suites() {
    let out = relfix(&["check", "--suite", "duality"]);
    assert_eq!(out.status.code(), Some(0));
    let out = relfix(&["check", "--suite", "fixture-corrupt"]);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    let witness = &v["details"]["fixture-corrupt"]["witness"];
    assert_eq!(witness["kind"], "LawViolation");
    assert!(witness["message"].as_str().unwrap().contains("F(u1∘u2"));
}
