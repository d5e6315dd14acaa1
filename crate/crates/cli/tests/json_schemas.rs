mod common;

use std::fs;
use std::path::PathBuf;

use common::{fixture, gakit};
use serde_json::Value;

fn schema(command: &str) -> jsonschema::Validator {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "schemas", &format!("{command}.schema.json")]
        .iter()
        .collect();
    let text = fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let v: Value = serde_json::from_str(&text).unwrap();
    jsonschema::validator_for(&v).unwrap()
}

fn check(command: &str, args: &[&str]) -> Value {
    let mut full = vec![command, "--json"];
    full.extend_from_slice(args);
    let r = gakit(&full);
    assert_eq!(r.code, 0, "{command}: {}", r.stderr);
    assert_eq!(r.stdout.lines().count(), 1, "one object per invocation");
    let out: Value = serde_json::from_str(&r.stdout).unwrap();
    let v = schema(command);
    let errors: Vec<String> = v.iter_errors(&out).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{command}: {errors:?}\n{out}");
    out
}

#[test]
fn every_command_matches_its_schema() {
    let dir = tempfile::tempdir().unwrap();
    let d = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let small = fixture("small_manifest.jsonl");

    check("kernel-eval", &["--manifest", &small, "--a", "story", "--b", "story2", "--path"]);
    check("selftest", &[]);
    check("selftest", &["--list"]);
    check("synth", &["--out-dir", &d("synth"), "--docs", "16"]);
    check(
        "train-projector",
        &[
            "--manifest", &d("synth/manifest.jsonl"), "--hidden", &d("synth/hidden.jsonl"),
            "--out", &d("p.json"), "--steps", "20",
        ],
    );
    check(
        "project",
        &["--projector", &d("p.json"), "--hidden", &d("synth/hidden.jsonl"), "--out", &d("v.jsonl")],
    );
    check("index", &["--vectors", &fixture("recall_vectors.jsonl"), "--out", &d("r.sgix")]);
    let q = check("query", &["--index", &d("r.sgix"), "--vector", "AACAPwAAAAA=", "--k", "3"]);
    assert_eq!(q["hits"][0]["doc_id"], "a");
    check("query", &["--gak", "--manifest", &small, "--doc", "story"]);
    let r = check(
        "eval-recall",
        &["--index", &d("r.sgix"), "--cases", &fixture("recall_cases.jsonl"), "--ks", "1,5"],
    );
    assert_eq!(r["recall"][1]["recall"], 1.0);
    check("eval-winoground", &["--input", &fixture("wino_mixed.jsonl")]);
}

#[test]
fn schemas_reject_wrong_shapes() {
    let v = schema("eval-winoground");
    let bad: Value = serde_json::json!({"command": "eval-winoground", "examples": 1, "text": 2.0});
    assert!(!v.is_valid(&bad));
    let v = schema("query");
    let bad: Value = serde_json::json!({"command": "query", "hits": [{"rank": 0, "doc_id": "a", "score": 1}]});
    assert!(!v.is_valid(&bad));
}
