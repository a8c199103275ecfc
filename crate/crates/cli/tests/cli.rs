use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn gwroot(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gwroot")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

struct Fixture {
    dir: TempDir,
}

impl Fixture {
    fn new() -> Self {
        let dir = TempDir::new().unwrap();
        write(dir.path(), "binary.json", r#"{"family": "binomial", "params": {"k": 2}}"#);
        write(dir.path(), "full.json", r#"{"family": "full-binary"}"#);
        write(dir.path(), "poisson.json", r#"{"family": "poisson"}"#);
        write(dir.path(), "path4.json", r#"{"n": 4, "edges": [[0, 1], [1, 2], [2, 3]]}"#);
        write(dir.path(), "path3.json", r#"{"n": 3, "edges": [[0, 1], [1, 2]]}"#);
        write(dir.path(), "star4.json", r#"{"n": 4, "edges": [[0, 1], [0, 2], [0, 3]]}"#);
        Fixture { dir }
    }

    fn path(&self, name: &str) -> String {
        self.dir.path().join(name).to_string_lossy().into_owned()
    }
}

#[test]
fn estimate_examples() {
    let fx = Fixture::new();
    let path = stdout_json(&gwroot(&["estimate", "--tree", &fx.path("path4.json"), "--dist", &fx.path("binary.json")]));
    assert_eq!(path["p_correct"], "1/3");
    assert_eq!(path["candidate_set"], serde_json::json!([0, 3]));

    let full = stdout_json(&gwroot(&["estimate", "--tree", &fx.path("path3.json"), "--dist", &fx.path("full.json")]));
    assert_eq!(full["chosen"], 1);
    assert_eq!(full["p_correct"], "1");
    assert_eq!(full["special_hit"], true);

    let star = stdout_json(&gwroot(&["estimate", "--tree", &fx.path("star4.json"), "--dist", &fx.path("poisson.json")]));
    assert_eq!(star["p_correct"], 0.25);
    assert_eq!(star["candidate_set"].as_array().unwrap().len(), 4);
}

#[test]
fn posterior_report() {
    let fx = Fixture::new();
    let report = stdout_json(&gwroot(&["posterior", "--tree", &fx.path("path4.json"), "--dist", &fx.path("binary.json")]));
    let values: Vec<&str> = report["nodes"].as_array().unwrap().iter().map(|n| n["posterior"].as_str().unwrap()).collect();
    assert_eq!(values, ["1/3", "1/6", "1/6", "1/3"]);
    assert_eq!(report["omega"], serde_json::json!([0, 3]));
    assert_eq!(report["p_correct"], "1/3");
}

#[test]
fn sample_binary_shapes_are_uniform_over_positional_trees() {
    let fx = Fixture::new();
    let out_file = fx.path("trees.jsonl");
    let out = gwroot(&["sample", "--dist", &fx.path("binary.json"), "--n", "4", "--count", "14000", "--seed", "3", "--out", &out_file]);
    assert!(out.status.success());
    let text = fs::read_to_string(&out_file).unwrap();
    let mut counts: HashMap<String, usize> = HashMap::new();
    for line in text.lines() {
        let v: Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["free"]["edges"].as_array().unwrap().len(), 3);
        *counts.entry(v["rooted"]["parent"].to_string()).or_default() += 1;
    }
    // Plane shapes and their number of positional binary variants.
    let variants = [("[-1,0,1,2]", 8.0), ("[-1,0,1,1]", 2.0), ("[-1,0,0,2]", 2.0), ("[-1,0,1,0]", 2.0)];
    assert_eq!(counts.len(), variants.len());
    for (shape, v) in variants {
        let p: f64 = v / 14.0;
        let c = counts[shape] as f64;
        let sd = (14000.0 * p * (1.0 - p)).sqrt();
        assert!((c - 14000.0 * p).abs() <= 4.0 * sd, "{shape}: {c}");
    }
}

#[test]
fn sample_edge_cases() {
    let fx = Fixture::new();
    let single = stdout_json(&gwroot(&["sample", "--dist", &fx.path("binary.json"), "--n", "1"]));
    assert_eq!(single["rooted"], serde_json::json!({"n": 1, "parent": [-1]}));

    let infeasible = gwroot(&["sample", "--dist", &fx.path("full.json"), "--n", "4"]);
    assert_eq!(infeasible.status.code(), Some(3));
    assert!(infeasible.stdout.is_empty());
}

#[test]
fn configuration_errors_exit_with_2() {
    let fx = Fixture::new();
    let bad = write(fx.dir.path(), "bad.json", r#"{"family": "binomial", "params": {"k": 1}}"#);
    let out = gwroot(&["sample", "--dist", bad.to_str().unwrap(), "--n", "3"]);
    assert_eq!(out.status.code(), Some(2));
    let missing = gwroot(&["sample", "--dist", "/nonexistent/dist.json", "--n", "3"]);
    assert_eq!(missing.status.code(), Some(2));
    assert_eq!(gwroot(&["sample", "--n", "3"]).status.code(), Some(2));
    assert_eq!(gwroot(&["verify", "no-such-suite"]).status.code(), Some(2));
}

#[test]
fn verify_suites() {
    let out = gwroot(&["verify", "lemma2", "--seed", "4"]);
    let reports = stdout_json(&out);
    assert_eq!(reports[0]["cases"], 1000);
    assert_eq!(reports[0]["passed"], true);
    let oracle = stdout_json(&gwroot(&["verify", "oracle-equivalence"]));
    assert_eq!(oracle[0]["passed"], true);
}

#[test]
fn table1_rows() {
    let out = gwroot(&["table1", "--n", "100", "--trials", "2000", "--seed", "1"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 5);
    let predicted = |family: &str| -> (usize, f64) {
        let row = rows.iter().find(|r| r[0].starts_with(family)).unwrap();
        (row[1].parse().unwrap(), row[7].parse().unwrap())
    };
    assert_eq!(predicted("k-ary"), (100, 2.0 / 102.0));
    assert_eq!(predicted("cayley"), (100, 0.01));
    assert_eq!(predicted("full binary"), (101, 1.0));
    let full = rows.iter().find(|r| r[0] == "full binary").unwrap();
    assert_eq!(full[3].parse::<f64>().unwrap(), 1.0);
}

#[test]
fn commands_are_deterministic() {
    let fx = Fixture::new();
    let run = || gwroot(&["run", "--dist", &fx.path("binary.json"), "--n", "30", "--trials", "3000", "--seed", "9"]).stdout;
    assert_eq!(run(), run());
    let sample = || gwroot(&["sample", "--dist", &fx.path("poisson.json"), "--n", "25", "--count", "20", "--seed", "9"]).stdout;
    assert_eq!(sample(), sample());
}

#[test]
fn campaign_outputs() {
    let fx = Fixture::new();
    let config = write(
        fx.dir.path(),
        "campaign.json",
        r#"[{"dist": {"family": "poisson"}, "n": 20, "trials": 3000, "seed": 2, "checks": ["exact", "consistency"]},
            {"dist": {"family": "full-binary"}, "n": 9, "trials": 500, "seed": 3, "checks": ["special"]}]"#,
    );
    let out = gwroot(&["campaign", "--config", config.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let lines: Vec<Value> =
        String::from_utf8(out.stdout).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0]["predicted"]["cayley"]["value"], 0.05);
    assert_eq!(lines[1]["empirical_rate"], 1.0);

    let csv = gwroot(&["campaign", "--config", config.to_str().unwrap(), "--format", "csv"]);
    assert_eq!(String::from_utf8(csv.stdout).unwrap().lines().count(), 3);
}

#[test]
fn stats_for_poisson() {
    let fx = Fixture::new();
    let report = stdout_json(&gwroot(&["stats", "--dist", &fx.path("poisson.json"), "--n", "100", "--trials", "200"]));
    assert_eq!(report["mean_w_over_n"], 1.0);
    assert_eq!(report["mean_n_over_w"], 1.0);
}

#[test]
fn rooted_tree_files_are_accepted() {
    let fx = Fixture::new();
    let rooted = write(fx.dir.path(), "rooted.json", r#"{"n": 4, "parent": [-1, 0, 1, 2]}"#);
    let est = stdout_json(&gwroot(&["estimate", "--tree", rooted.to_str().unwrap(), "--dist", &fx.path("binary.json")]));
    assert_eq!(est["p_correct"], "1/3");
}
