use std::net::TcpListener;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn cast(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cast"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn planted() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let o = cast(dir.path(), &["synth", "-q", "--docs-per-topic", "60", "--out-truth", "truth.json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    dir
}

const INPUTS: [&str; 4] = ["-i", "corpus.jsonl", "-e", "corpus.castemb"];

fn with_inputs<'a>(head: &[&'a str], tail: &[&'a str]) -> Vec<&'a str> {
    head.iter().chain(INPUTS.iter()).chain(tail).copied().collect()
}

#[test]
fn missing_input_exits_2_and_names_the_path() {
    let dir = planted();
    let o = cast(dir.path(), &["model", "-i", "absent.jsonl", "-e", "corpus.castemb"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("absent.jsonl"));
    let o = cast(dir.path(), &["validate", "absent.castemb"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("absent.castemb"));
}

#[test]
fn bad_parameters_exit_2_before_reading_files() {
    let dir = tempfile::tempdir().unwrap();
    let o = cast(dir.path(), &["model", "-i", "absent.jsonl", "-e", "absent.castemb", "--n-topics", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!stderr(&o).contains("absent"));
    let o = cast(dir.path(), &["model", "-i", "absent.jsonl", "-e", "absent.castemb", "--ss-threshold", "1.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("ss-threshold"));
    let o = cast(dir.path(), &["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn validate_reports_truncation_and_bad_values() {
    let dir = planted();
    let bytes = std::fs::read(dir.path().join("corpus.castemb")).unwrap();
    let o = cast(dir.path(), &["validate", "corpus.castemb"]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("documents    180"));

    std::fs::write(dir.path().join("cut.castemb"), &bytes[..bytes.len() - 7]).unwrap();
    let o = cast(dir.path(), &["validate", "cut.castemb"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("truncated at byte"), "{}", stderr(&o));

    // The first document vector starts right after the 32-byte header.
    let mut nan = bytes.clone();
    nan[32..36].copy_from_slice(&f32::NAN.to_le_bytes());
    std::fs::write(dir.path().join("nan.castemb"), nan).unwrap();
    let o = cast(dir.path(), &["validate", "nan.castemb"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("document record 0"), "{}", stderr(&o));
}

#[test]
fn model_corpus_mismatch_is_a_data_error() {
    let dir = planted();
    std::fs::write(dir.path().join("short.jsonl"), "{\"text\": \"one two three\"}\n").unwrap();
    let o = cast(dir.path(), &["model", "-i", "short.jsonl", "-e", "corpus.castemb", "--n-topics", "3"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}

#[test]
fn flags_override_config_file_which_overrides_defaults() {
    let dir = planted();
    std::fs::write(dir.path().join("c.json"), r#"{"n_topics": 2, "top_k": 4, "seed": 5}"#).unwrap();
    let o = cast(dir.path(), &with_inputs(&["--config", "c.json", "model", "-q"], &["--n-topics", "3", "--out", "m.json"]));
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&std::fs::read(dir.path().join("m.json")).unwrap()).unwrap();
    let cfg = &v["run_config"];
    assert_eq!(cfg["n_topics"], 3);
    assert_eq!(cfg["top_k"], 4);
    assert_eq!(cfg["seed"], 5);
    assert_eq!(cfg["min_cluster_size"], 15);
    assert!(cfg.get("out").is_none());
    assert_eq!(v["model"]["topics"][0]["top_words"].as_array().unwrap().len(), 4);

    // An artifact works as a config file; the global seed flag wins.
    let o = cast(dir.path(), &["--config", "m.json", "--seed", "9", "model", "-q", "--out", "m2.json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&std::fs::read(dir.path().join("m2.json")).unwrap()).unwrap();
    assert_eq!(v["run_config"]["seed"], 9);
    assert_eq!(v["run_config"]["top_k"], 4);

    std::fs::write(dir.path().join("bad.json"), r#"{"n_topic": 2}"#).unwrap();
    let o = cast(dir.path(), &with_inputs(&["--config", "bad.json", "model"], &[]));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("n_topic"));
}

#[test]
fn eval_scores_a_model_against_its_corpus() {
    let dir = planted();
    let o = cast(dir.path(), &with_inputs(&["model", "-q"], &["--n-topics", "3", "--reducer", "pca", "--out", "m.json"]));
    assert!(o.status.success(), "{}", stderr(&o));
    let o = cast(dir.path(), &["--format", "json", "eval", "--model", "m.json", "--out", "e.json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["report"]["topic_diversity"], 1.0);
    assert!(v["report"]["npmi_mean"].as_f64().unwrap() > 0.0);
    assert!(dir.path().join("e.json").exists());
}

#[test]
fn unreachable_llm_endpoint_exits_3() {
    let dir = planted();
    let o = cast(dir.path(), &with_inputs(&["model", "-q"], &["--n-topics", "3", "--reducer", "pca", "--out", "m.json"]));
    assert!(o.status.success(), "{}", stderr(&o));
    // Bind then drop to get a port nobody listens on.
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let url = format!("http://127.0.0.1:{port}/v1/chat/completions");
    let o = cast(dir.path(), &["-q", "eval", "--model", "m.json", "--llm-endpoint", &url]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains(&url));
}

#[test]
fn ss_report_json_lists_thresholds() {
    let dir = planted();
    let o = cast(dir.path(), &with_inputs(&["--format", "json", "ss-report"], &["--thresholds", "0.9,0.5"]));
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let sections = v["report"]["sections"].as_array().unwrap();
    assert_eq!(sections.len(), 2);
    assert_eq!(sections[0]["threshold"], 0.9);
}

#[test]
fn ablate_rejects_out_of_range_thresholds() {
    let dir = planted();
    let o = cast(dir.path(), &with_inputs(&["ablate"], &["--thresholds", "0.2,-0.1"]));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("-0.1"));
}
