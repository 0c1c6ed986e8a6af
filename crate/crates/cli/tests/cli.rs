use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_symelect"))
}

fn scratch(name: &str, text: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("symelect-cli-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const ASYNC_PAIR: &str = "%ids 0\n!x_0!a | !x_1?(y).o!0\n|| !x_1!a | !x_0?(y).o!1\n";

#[test]
fn two_node_election_is_electoral() {
    let gen = run(&["gen", "two-node"]);
    let f = scratch("two.pi", &stdout(&gen));
    let o = run(&["elect", f.to_str().unwrap(), "--depth", "12", "--unfold", "0"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("leaders {0, 1}"), "{}", stdout(&o));
    let steps = run(&["step", f.to_str().unwrap()]);
    assert!(stdout(&steps).lines().filter(|l| l.contains("] tau")).count() >= 2);
}

#[test]
fn split_choice_is_not_electoral() {
    let f = scratch("split.pi", "%ids 0\nx_0!(y).o!0 | x_1?(y).o!1 || x_1!(y).o!1 | x_0?(y).o!0\n");
    let o = run(&["elect", f.to_str().unwrap(), "--dialect", "sep"]);
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
    assert!(stdout(&o).starts_with("not electoral"));
}

#[test]
fn step_edge_cases() {
    let empty = scratch("empty.pi", "");
    assert_eq!(stdout(&run(&["step", empty.to_str().unwrap()])).trim(), "no steps");
    let f = scratch("one.pi", "a!b");
    let o = run(&["step", f.to_str().unwrap(), "--apply", "7"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("1 steps are enabled"));
    let o = run(&["step", f.to_str().unwrap(), "--apply", "0"]);
    assert_eq!(stdout(&o).trim(), "0");
}

#[test]
fn adversary_trace_replays_and_tampering_is_caught() {
    let f = scratch("async.pi", ASYNC_PAIR);
    let t = f.with_extension("jsonl");
    let o = run(&["adversary", f.to_str().unwrap(), "--dialect", "pia", "--rounds", "5", "--trace", t.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let ok = run(&["replay", t.to_str().unwrap()]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(stdout(&ok).starts_with("ok: 10 steps"));
    let text = fs::read_to_string(&t).unwrap();
    let bad = scratch("bad.jsonl", &text.replacen("x_1", "x_2", 1));
    let o = run(&["replay", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("record 0"));
}

#[test]
fn adversary_json_summary() {
    let f = scratch("async2.pi", ASYNC_PAIR);
    let o = run(&["adversary", f.to_str().unwrap(), "--dialect", "pia", "--rounds", "3", "--json"]);
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(v["rounds"], 3);
    assert_eq!(v["announcements"], 0);
}

#[test]
fn ccs_rings() {
    let o = run(&["gen", "ccs-ring", "--k", "4", "--shift", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let f = scratch("ring.pi", &stdout(&o));
    let o = run(&["adversary", f.to_str().unwrap(), "--dialect", "ccs", "--rounds", "10", "--json"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(run(&["gen", "ccs-ring", "--k", "2", "--shift", "1"]).status.code(), Some(3));
}

#[test]
fn monitor_encoding_is_not_uniform() {
    let o = run(&["encode-check", "--encoding", "monitor"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("counterexample"));
    let o = run(&["encode-check", "--encoding", "drop-continuations", "--json"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn external_encoding_through_cat() {
    // `cat` is the identity, whose images leave the asynchronous fragment
    let o = run(&["encode-check", "--external", "cat", "--target", "pi"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let o = run(&["encode-check", "--external", "cat", "--target", "pia"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn usage_errors_exit_with_three() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(3));
    assert_eq!(run(&["parse", "/nonexistent/file.pi"]).status.code(), Some(3));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn election_generator_from_spec() {
    let spec = scratch("pair.spec", "nodes 2\na 1 2\n");
    let o = run(&["gen", "election", "--spec", spec.to_str().unwrap()]);
    let f = scratch("pair.pi", &stdout(&o));
    let o = run(&["elect", f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let bad = scratch("split.spec", "nodes 3\na 1 2\n");
    assert_eq!(run(&["gen", "election", "--spec", bad.to_str().unwrap()]).status.code(), Some(3));
}
