mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::toy_dir;
use sha2::{Digest, Sha256};

fn in2v(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_in2v"))
        .arg("--out")
        .arg(out)
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn stdout_line(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).trim().to_string()
}

fn checksum(path: &str) -> String {
    hex::encode(Sha256::digest(std::fs::read(path).unwrap()))
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(in2v(dir.path(), &["bogus"]).status.code(), Some(1));
    assert_eq!(in2v(dir.path(), &["split", "--train-fraction", "0.4"]).status.code(), Some(1));
    assert_eq!(in2v(dir.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn missing_inputs_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = in2v(dir.path(), &["stats", "/nonexistent/dataset"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
    let toy = toy_dir();
    let o = in2v(
        dir.path(),
        &["train", "--dataset", toy.to_str().unwrap(), "--split", "/nonexistent/split.json"],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("split"));
}

#[test]
fn stats_on_edgeless_graph_still_prints_counts() {
    let dir = tempfile::tempdir().unwrap();
    let ds = dir.path().join("empty");
    std::fs::create_dir(&ds).unwrap();
    std::fs::write(ds.join("edges.txt"), "#nodes 3\n").unwrap();
    std::fs::write(ds.join("labels.tsv"), "0\t0\n1\t1\n2\t0\n").unwrap();
    let o = in2v(dir.path(), &["stats", ds.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let stats: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(stats["nodes"], 3);
    assert_eq!(stats["edges_directed"], 0);
    assert!(stats["adjusted_homophily"].is_null());
}

#[test]
fn split_sizes() {
    let dir = tempfile::tempdir().unwrap();
    let o = in2v(dir.path(), &["split", "--num-nodes", "2708", "--train-fraction", "0.4"]);
    assert!(o.status.success());
    let split: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(stdout_line(&o)).unwrap()).unwrap();
    assert_eq!(split["train"].as_array().unwrap().len(), 1083);
    assert_eq!(split["val"].as_array().unwrap().len(), 812);
    assert_eq!(split["test"].as_array().unwrap().len(), 813);
}

#[test]
fn stage_pipeline_on_toy_data() {
    let toy = toy_dir();
    let toy = toy.to_str().unwrap();
    let train_args = |split: &str| {
        vec![
            "train".to_string(),
            "--dataset".into(),
            toy.into(),
            "--split".into(),
            split.into(),
            "--dim".into(),
            "8".into(),
            "--max-epochs".into(),
            "3".into(),
        ]
    };

    let a = tempfile::tempdir().unwrap();
    let split = stdout_line(&in2v(a.path(), &["split", "--dataset", toy, "--train-fraction", "0.4"]));
    let args = train_args(&split);
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    let o = in2v(a.path(), &args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let emb = stdout_line(&o);
    assert!(Path::new(&format!("{emb}.meta.json")).is_file());

    // A fresh workspace reproduces the same bytes.
    let b = tempfile::tempdir().unwrap();
    let split_b = stdout_line(&in2v(b.path(), &["split", "--dataset", toy, "--train-fraction", "0.4"]));
    let args_b = train_args(&split_b);
    let args_b: Vec<&str> = args_b.iter().map(String::as_str).collect();
    let emb_b = stdout_line(&in2v(b.path(), &args_b));
    assert_eq!(checksum(&emb), checksum(&emb_b));

    let o = in2v(
        a.path(),
        &["extend", "--dataset", toy, "--split", &split, "--embedding", &emb, "--method", "fp"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_slice(o.stderr.trim_ascii()).unwrap();
    // Only isolated nodes outside the training set stay unreachable.
    let ds = in2v_core::Dataset::load(toy).unwrap();
    let sp = in2v_core::SplitAssignment::load(&split).unwrap();
    let isolated = (0..ds.graph.num_nodes())
        .filter(|&v| ds.graph.neighbors(v).is_empty() && sp.train.binary_search(&v).is_err())
        .count();
    assert_eq!(report["nodes_unreachable"], isolated);
    assert_eq!(report["nodes_covered"], 90 - isolated);
    let full = stdout_line(&o);

    let o = in2v(
        a.path(),
        &["eval", "--dataset", toy, "--split", &split, "--embedding", &full, "--kind", "logreg"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let scores: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let acc = scores["test_accuracy"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&acc));

    // Evaluating the training-only matrix is refused with a hint.
    let o = in2v(
        a.path(),
        &["eval", "--dataset", toy, "--split", &split, "--embedding", &emb],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("extend"));
}
