use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use graphck::{CornerGraph, Graph};
use tempfile::TempDir;

fn graphck(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_graphck")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

const G1: &str = r#"{"vertices":["a"],"adjacency":[[2]]}"#;
const G5: &str = r#"{"vertices":["v","w"],"adjacency":[[0,"inf"],[0,1]]}"#;
const SOURCE: &str = r#"{"vertices":["u","a"],"adjacency":[[0,1],[0,2]]}"#;

#[test]
fn analyze_reports() {
    let dir = TempDir::new().unwrap();
    let g1 = write(dir.path(), "g1.json", G1);
    let o = graphck(&["analyze", g1.to_str().unwrap()]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("stably complete: yes"));
    assert!(text.contains("condition (K): true"));

    let o = graphck(&["analyze", g1.to_str().unwrap(), "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["condition_k"], true);
    assert_eq!(v["stably_complete"]["satisfied"], true);
}

#[test]
fn failed_move_exits_one() {
    let dir = TempDir::new().unwrap();
    let g = write(dir.path(), "g.json", SOURCE);
    let o = graphck(&["move", g.to_str().unwrap(), "--op", "collapse", "--vertex", "u"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("move error"));
}

#[test]
fn bad_input_exits_one() {
    let dir = TempDir::new().unwrap();
    let g = write(dir.path(), "g.json", r#"{"vertices":["a","a"],"adjacency":[[0,0],[0,0]]}"#);
    assert_eq!(graphck(&["ktheory", g.to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(graphck(&["ktheory", "/nonexistent.json"]).status.code(), Some(1));
    assert_eq!(graphck(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn moves_round_trip_and_trace() {
    let dir = TempDir::new().unwrap();
    let g = write(dir.path(), "g.json", SOURCE);
    let out = dir.path().join("out.json");
    let trace = dir.path().join("trace.json");
    let o = graphck(&[
        "move",
        g.to_str().unwrap(),
        "--op",
        "remove-source",
        "--vertex",
        "u",
        "-o",
        out.to_str().unwrap(),
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let h: Graph = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(h, Graph::from_counts(["a"], &[&[2]]).unwrap());
    let rec: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&trace).unwrap()).unwrap();
    assert_eq!(rec["kind"], "S");

    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(serde_json::from_str::<Graph>(&text).unwrap().to_json(), h.to_json());
}

#[test]
fn canonicalize_and_dot() {
    let dir = TempDir::new().unwrap();
    let g = write(dir.path(), "g.json", SOURCE);
    let trace = dir.path().join("trace.json");
    let o = graphck(&["canonicalize", g.to_str().unwrap(), "--trace", trace.to_str().unwrap()]);
    assert!(o.status.success());
    let c: Graph = serde_json::from_slice(&o.stdout).unwrap();
    assert!(graphck::canonical::is_stably_complete(&c).satisfied);
    let steps: Vec<graphck::MoveRecord> = serde_json::from_str(&std::fs::read_to_string(&trace).unwrap()).unwrap();
    let input: Graph = serde_json::from_str(SOURCE).unwrap();
    assert_eq!(graphck::moves::replay_trace(&input, &steps).unwrap(), c);

    let o = graphck(&["canonicalize", g.to_str().unwrap(), "--format", "dot"]);
    assert!(stdout(&o).starts_with("digraph G {"));
    let o = graphck(&["export-dot", g.to_str().unwrap()]);
    assert!(stdout(&o).contains("\"a\" -> \"a\" [label=\"2\"];"));
}

#[test]
fn fuel_variable_is_validated() {
    let dir = TempDir::new().unwrap();
    let g = write(dir.path(), "g.json", SOURCE);
    let o = Command::new(env!("CARGO_BIN_EXE_graphck"))
        .args(["canonicalize", g.to_str().unwrap()])
        .env("GRAPHCK_FUEL", "lots")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn ideals_and_ktheory() {
    let dir = TempDir::new().unwrap();
    let g = write(dir.path(), "g5.json", G5);
    let o = graphck(&["ideals", g.to_str().unwrap()]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["nodes"].as_array().unwrap().len(), 3);
    let o = graphck(&["ideals", g.to_str().unwrap(), "--format", "dot"]);
    assert!(stdout(&o).contains("rankdir=BT"));

    let o = graphck(&["ktheory", g.to_str().unwrap()]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["k0_free_rank"], 2);
    assert_eq!(v["k1_free_rank"], 1);
}

#[test]
fn corner_and_unitize() {
    let dir = TempDir::new().unwrap();
    let g = write(dir.path(), "g5.json", G5);
    let s = write(dir.path(), "s.json", r#"{"head":[[{"v":"w","n":1}]],"tail":[{"v":"v","T":[["v","w",0]],"n":1}]}"#);
    let o = graphck(&["corner", g.to_str().unwrap(), s.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["multiplicities"]["v"], "inf");
    assert_eq!(v["multiplicities"]["w"], 1);
    let corner: CornerGraph = serde_json::from_value(v["corner"].clone()).unwrap();
    let c = write(dir.path(), "c.json", &serde_json::to_string(&corner).unwrap());

    let o = graphck(&["corner", g.to_str().unwrap(), s.to_str().unwrap(), "--realize"]);
    assert_eq!(o.status.code(), Some(1));

    let o = graphck(&["unitize", c.to_str().unwrap()]);
    let u: Graph = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(u.len(), 3);
    assert!(u.is_infinite_emitter(2));

    let single = write(dir.path(), "one.json", r#"[{"v":"v","T":[["v","w",0]],"n":1}]"#);
    let o = graphck(&["corner", g.to_str().unwrap(), single.to_str().unwrap(), "--realize"]);
    let r: Graph = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r, serde_json::from_str::<Graph>(G5).unwrap());
}

#[test]
fn verify_is_deterministic() {
    let args = ["verify", "--corpus", "200", "--max-vertices", "6", "--seed", "7"];
    let a = graphck(&args);
    assert!(a.status.success());
    assert_eq!(stdout(&a), "200/200 invariance checks passed\n");
    assert_eq!(stdout(&graphck(&args)), stdout(&a));
}
