use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use horseshoe_net::cli_io::{parse_scene, CliError};
use horseshoe_net::exact::{parse_rational, ratio, RatVector, Rational};
use serde_json::Value;

fn scenes() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenes")
}

fn hn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hn")).args(args).current_dir(scenes()).output().unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

fn rat_vec(v: &Value) -> RatVector {
    RatVector(v.as_array().unwrap().iter().map(|x| parse_rational(x.as_str().unwrap()).unwrap()).collect())
}

#[test]
fn exit_codes() {
    assert_eq!(hn(&["validate", "two_handles.json"]).status.code(), Some(0));
    let warned = hn(&["validate", "chain.json"]);
    assert_eq!(warned.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&warned.stderr).contains("geodesic transversality"));
    let missing = hn(&["scc", "no_such_scene.json"]);
    assert_eq!(missing.status.code(), Some(1));
    assert_eq!(hn(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn bad_scene_reports_location() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    std::fs::write(
        &p,
        r#"{"genus": 2, "horseshoes": [{"id": "x", "period": 1, "decks": ["a1", "c4"]}]}"#,
    )
    .unwrap();
    let o = hn(&["scc", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("horseshoes[0].decks[1]"));
    match parse_scene(r#"{"genus": 2, "horseshoes": [{"id": "x", "period": 0, "decks": []}]}"#) {
        Err(CliError::Scene(issues)) => assert_eq!(issues.len(), 2),
        other => panic!("{other:?}"),
    }
}

#[test]
fn realize_word_is_within_twice_eps() {
    let o = hn(&["realize", "two_handles.json", "--target", "1/4,1/8,1/4,1/6", "--eps", "1/100"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    let target = RatVector(vec![ratio(1, 4), ratio(1, 8), ratio(1, 4), ratio(1, 6)]);
    let got = rat_vec(&v["rotation"]);
    assert!(got.dist_inf(&target) <= ratio(1, 50));
    let outside = hn(&["realize", "two_handles.json", "--target", "5,0,0,0"]);
    assert_eq!(outside.status.code(), Some(1));
}

#[test]
fn stream_writes_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let cert = dir.path().join("c.txt");
    let o = hn(&[
        "realize", "two_handles.json", "--target", "1/2,1/3,0,0", "--symbols", "500", "--cert", cert.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["edges"].as_array().unwrap().len(), 500);
    let text = std::fs::read_to_string(cert).unwrap();
    assert!(text.starts_with("target 1/2,1/3,0,0\n"));
    assert!(text.lines().any(|l| l.starts_with("stage\t")));
}

#[test]
fn graph_t_from_table_and_geodesics() {
    let three = json(&hn(&["graph-t", "linear_three.json"]));
    assert_eq!(three["oracle"], "table");
    let pairs: Vec<(u64, u64)> = three["edges"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| (e["from"].as_u64().unwrap(), e["to"].as_u64().unwrap()))
        .collect();
    assert_eq!(pairs, vec![(0, 1), (1, 2)]);
    let two = json(&hn(&["graph-t", "linear_two.json"]));
    assert_eq!(two["edges"].as_array().unwrap().len(), 1);
}

#[test]
fn markov_problems() {
    let chain = json(&hn(&["markov", "markov_chain.json"]));
    assert_eq!(chain["point"]["x"], serde_json::json!(["27/34", "29/148"]));
    let inter = json(&hn(&["markov", "markov_intersection.json"]));
    assert_eq!(inter["pre_markovian"], true);
    let margin: Rational = parse_rational(inter["margin"].as_str().unwrap()).unwrap();
    assert!(margin > ratio(0, 1));
}

#[test]
fn svg_has_one_polygon_per_polytope() {
    let rot = json(&hn(&["rotset", "two_handles.json"]));
    let n = rot["rotation_set"].as_array().unwrap().len();
    let svg = String::from_utf8(hn(&["svg", "two_handles.json", "--axes", "0", "2"]).stdout).unwrap();
    assert!(svg.starts_with("<?xml"));
    assert_eq!(svg.matches("<polygon").count(), n);
}

#[test]
fn leafspace_finds_crossing_pair() {
    let v = json(&hn(&["leafspace", "chords.txt"]));
    assert_eq!(v["pairs"][0]["transverse"], true);
}
