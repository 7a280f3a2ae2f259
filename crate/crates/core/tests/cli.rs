//! End-to-end tests of the `wzs` binary: exit codes, JSON shape, cache
//! behavior, and byte-stable output.

use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn wzs() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wzs"))
}

fn run(args: &[&str]) -> (Value, Output) {
    let output = wzs().args(args).output().expect("binary runs");
    let doc: Value = serde_json::from_slice(&output.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}",
            String::from_utf8_lossy(&output.stdout)
        )
    });
    (doc, output)
}

#[test]
fn constant_formula_example() {
    let (doc, output) = run(&["constant", "--n", "15", "--weights", "units"]);
    assert_eq!(output.status.code(), Some(0));
    assert_eq!(doc["result"]["constant"], 4);
    assert_eq!(doc["command"], "constant");
    assert!(doc["timing"]["elapsed_ms"].is_number());
}

#[test]
fn check_example() {
    let (doc, output) = run(&["check", "--n", "25", "--weights", "units", "--seq", "10,4,20"]);
    assert_eq!(output.status.code(), Some(0));
    assert_eq!(doc["result"]["extremal"], true);
    let (doc, _) = run(&["check", "--n", "4", "--weights", "set:1,3", "--seq", "1,2,2"]);
    assert_eq!(doc["result"]["extremal"], false);
    assert_eq!(doc["result"]["zero_window"]["start"], 1);
    assert_eq!(doc["result"]["zero_window"]["end"], 2);
}

#[test]
fn enumerate_count_example() {
    let (doc, output) = run(&["enumerate", "--n", "4", "--weights", "one", "--count-only"]);
    assert_eq!(output.status.code(), Some(0));
    assert_eq!(doc["result"]["count"], 6);
}

#[test]
fn enumerate_canonical_classes() {
    let (doc, output) = run(&["enumerate", "--n", "7", "--weights", "units^3", "--canonical"]);
    assert_eq!(output.status.code(), Some(0));
    assert_eq!(doc["result"]["classes"], 1);
    assert_eq!(doc["result"]["canonical"][0], serde_json::json!([1, 3, 1]));
}

#[test]
fn construct_decompose_canon_pipeline() {
    let (doc, output) =
        run(&["construct", "--n", "95", "--weights", "units^3", "--seed", "7"]);
    assert_eq!(output.status.code(), Some(0));
    let seq: Vec<String> = doc["result"]["sequence"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_u64().unwrap().to_string())
        .collect();
    let seq_arg = seq.join(",");

    let (doc, output) =
        run(&["decompose", "--n", "95", "--weights", "units^3", "--seq", &seq_arg]);
    assert_eq!(output.status.code(), Some(0));
    assert_eq!(doc["result"]["certificate"]["family"], "units-cubed");
    let recipe = doc["result"]["recipe"].as_str().unwrap().to_string();

    // The recipe rebuilds the same sequence.
    let (doc, output) = run(&[
        "construct",
        "--n",
        "95",
        "--weights",
        "units^3",
        "--recipe",
        &recipe,
    ]);
    assert_eq!(output.status.code(), Some(0));
    let rebuilt: Vec<String> = doc["result"]["sequence"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_u64().unwrap().to_string())
        .collect();
    assert_eq!(rebuilt.join(","), seq_arg);

    let (doc, _) = run(&["canon", "--n", "7", "--weights", "units^3", "--seq", "2,6,2"]);
    assert_eq!(doc["result"]["canonical"], serde_json::json!([1, 3, 1]));
    assert_eq!(doc["result"]["orbit_size"], 24);
}

#[test]
fn exit_code_domain_rejection() {
    let (doc, output) = run(&["construct", "--n", "12", "--weights", "units"]);
    assert_eq!(output.status.code(), Some(1));
    assert!(doc["error"].as_str().unwrap().contains("odd"));
    // Decomposing with an even modulus is rejected the same way.
    let (_, output) = run(&["decompose", "--n", "12", "--weights", "units", "--seq", "1,2,3"]);
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn exit_code_budget_exhaustion() {
    let (doc, output) = run(&[
        "constant",
        "--n",
        "11",
        "--weights",
        "one",
        "--max-nodes",
        "5",
    ]);
    assert_eq!(output.status.code(), Some(2));
    assert!(doc["result"]["lower_bound"].as_u64().unwrap() >= 2);
}

#[test]
fn exit_code_usage_errors() {
    // Unknown weight syntax.
    let output = wzs()
        .args(["constant", "--n", "9", "--weights", "bogus"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(64));
    // Missing required argument.
    let output = wzs().args(["constant", "--weights", "one"]).output().unwrap();
    assert_eq!(output.status.code(), Some(64));
    // Unparseable sequence.
    let output = wzs()
        .args(["check", "--n", "9", "--weights", "one", "--seq", "1,,2"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(64));
    // Help exits 0.
    let output = wzs().arg("--help").output().unwrap();
    assert_eq!(output.status.code(), Some(0));
}

#[test]
fn stable_output_is_byte_identical() {
    let args = ["constant", "--n", "15", "--weights", "units", "--stable"];
    let a = wzs().args(args).output().unwrap();
    let b = wzs().args(args).output().unwrap();
    assert_eq!(a.stdout, b.stdout);
    assert!(!a.stdout.is_empty());
}

#[test]
fn cache_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cache: PathBuf = dir.path().join("cache.jsonl");
    // A weight set with no closed form, so the search result lands in the
    // cache instead of being answered by a formula.
    let run_cached = |path: &PathBuf| {
        let output = wzs()
            .args(["constant", "--n", "13", "--weights", "set:1,5,8,12"])
            .env("WZS_CACHE", path)
            .output()
            .unwrap();
        let doc: Value = serde_json::from_slice(&output.stdout).unwrap();
        (doc, output)
    };
    let (first, output) = run_cached(&cache);
    assert_eq!(output.status.code(), Some(0));
    assert_eq!(first["provenance"]["mode"], "search-verified");
    let (second, _) = run_cached(&cache);
    assert_eq!(second["provenance"]["mode"], "cache");
    assert_eq!(first["result"], second["result"]);
    // A corrupt line only invalidates itself.
    std::fs::write(
        &cache,
        format!("{}\n{{broken\n", std::fs::read_to_string(&cache).unwrap().trim()),
    )
    .unwrap();
    let (third, _) = run_cached(&cache);
    assert_eq!(third["provenance"]["mode"], "cache");
    // The --cache flag overrides the environment.
    let other = dir.path().join("other.jsonl");
    let output = wzs()
        .args(["constant", "--n", "13", "--weights", "set:1,5,8,12", "--cache"])
        .arg(&other)
        .env("WZS_CACHE", &cache)
        .output()
        .unwrap();
    let doc: Value = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(doc["provenance"]["mode"], "search-verified");
    assert!(other.exists());
}

#[test]
fn seq_file_input() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("seqs.txt");
    std::fs::write(&path, "10,4,20\n10,21,20\n10,5,20\n").unwrap();
    let output = wzs()
        .args(["check", "--n", "25", "--weights", "units", "--seq-file"])
        .arg(&path)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
    let doc: Value = serde_json::from_slice(&output.stdout).unwrap();
    let items = doc["result"]["items"].as_array().unwrap();
    assert_eq!(items.len(), 3);
    assert_eq!(items[0]["extremal"], true);
    assert_eq!(items[1]["extremal"], true);
    assert_eq!(items[2]["extremal"], false);
}

#[test]
fn verify_theorems_small_scope() {
    let (doc, output) = run(&[
        "verify-theorems",
        "--max-n",
        "8",
        "--samples",
        "25",
    ]);
    assert_eq!(output.status.code(), Some(0));
    assert_eq!(doc["result"]["failed"], 0);
    let report = doc["result"]["report"].as_array().unwrap();
    assert!(report.iter().any(|e| e["statement"] == "constant-one" && e["status"] == "pass"));
    assert!(report
        .iter()
        .any(|e| e["statement"] == "decompose-squares" && e["status"] == "skipped"));
}
