use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn plurisurf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_plurisurf"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn case(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join(format!("tests/golden/cases/{name}.json"))
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("report is JSON")
}

#[test]
fn semigroup_single_and_sweep() {
    let out = plurisurf(&["semigroup", "--n", "3", "--m", "11"]);
    assert!(out.status.success());
    let doc = json(&out);
    assert_eq!(doc["semigroup"][0]["decomposition"]["multipliers"], serde_json::json!([2, 1]));

    let out = plurisurf(&["semigroup", "--n", "2", "--sweep", "1..8"]);
    let doc = json(&out);
    let entries = doc["semigroup"].as_array().unwrap();
    assert_eq!(entries.len(), 8);
    let four = &entries[3];
    assert_eq!(four["m"], 4);
    assert_eq!(four["decomposition"]["kind"], "not-representable");
}

#[test]
fn bad_sweep_is_a_parse_error() {
    let out = plurisurf(&["semigroup", "--n", "2", "--sweep", "9..3"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn classify_with_search_depth() {
    let out = plurisurf(&["classify", "--input", case("worked_two_thirds").to_str().unwrap(), "--depth", "3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = json(&out);
    assert_eq!(doc["singularity"]["classification"], "klt-not-canonical");
    assert!(doc["log"][1].as_str().unwrap().contains("agrees"));
}

#[test]
fn terminalize_orders_agree_on_the_worked_case() {
    let path = case("worked_two_thirds");
    let mut counts = Vec::new();
    for order in ["ascending", "descending"] {
        let out = plurisurf(&["terminalize", "--input", path.to_str().unwrap(), "--order", order]);
        assert!(out.status.success());
        let doc = json(&out);
        assert_eq!(doc["singularity"]["classification"], "terminal");
        counts.push(doc["terminalization"]["steps"].as_array().unwrap().len());
    }
    assert_eq!(counts, [3, 3]);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();

    let missing = dir.path().join("missing.json");
    assert_eq!(plurisurf(&["mmp", "--input", missing.to_str().unwrap()]).status.code(), Some(3));

    let garbage = dir.path().join("garbage.json");
    std::fs::write(&garbage, "{ not json").unwrap();
    assert_eq!(plurisurf(&["mmp", "--input", garbage.to_str().unwrap()]).status.code(), Some(3));

    // A coefficient of 1 on a crossing: parses, but the pair is not klt.
    let text = std::fs::read_to_string(case("worked_two_thirds")).unwrap();
    let not_klt = dir.path().join("not_klt.json");
    std::fs::write(&not_klt, text.replacen("\"2/3\"", "\"1\"", 1)).unwrap();
    let out_path = dir.path().join("out.json");
    let out = plurisurf(&[
        "pipeline",
        "--input",
        not_klt.to_str().unwrap(),
        "--output",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out_path.exists(), "failed runs leave no output");

    let report = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/reports/minimal_integral.report.json");
    let mut doc: Value = serde_json::from_str(&std::fs::read_to_string(report).unwrap()).unwrap();
    doc["certificate"]["m0"] = serde_json::json!(1);
    let tampered = dir.path().join("tampered.json");
    std::fs::write(&tampered, doc.to_string()).unwrap();
    assert_eq!(plurisurf(&["verify", "--input", tampered.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn pipeline_without_inputs_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut doc: Value = serde_json::from_str(&std::fs::read_to_string(case("minimal_integral")).unwrap()).unwrap();
    doc.as_object_mut().unwrap().remove("inputs");
    let path = dir.path().join("case.json");
    std::fs::write(&path, doc.to_string()).unwrap();
    let out = plurisurf(&["pipeline", "--input", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(out.stdout.is_empty());
}

#[test]
fn oracle_suite_runs_clean() {
    let out = plurisurf(&["oracle", "--cases", "10", "--depth", "3", "--seed", "7"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = json(&out);
    for suite in doc["oracle"].as_array().unwrap() {
        assert!(suite["mismatches"].as_array().unwrap().is_empty());
    }
}

#[test]
fn timing_is_opt_in() {
    let path = case("minimal_integral");
    let plain = json(&plurisurf(&["pipeline", "--input", path.to_str().unwrap()]));
    assert!(plain.get("timing").is_none());
    let timed = json(&plurisurf(&["pipeline", "--input", path.to_str().unwrap(), "--timing"]));
    assert!(timed["timing"]["elapsed_ms"].is_number());
}
