use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn pqr() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_pqr"));
    cmd.env_remove("PQR_INDEX");
    cmd
}

fn run(args: &[&str]) -> Output {
    pqr().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write_corpus(dir: &Path, docs: &[(&str, &str)]) -> PathBuf {
    let path = dir.join("corpus.jsonl");
    let body: String = docs
        .iter()
        .map(|(id, text)| serde_json::json!({"doc_id": id, "text": text}).to_string() + "\n")
        .collect();
    fs::write(&path, body).unwrap();
    path
}

/// Builds an index from `docs` and returns (tempdir, index dir).
fn indexed(docs: &[(&str, &str)]) -> (TempDir, String) {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = write_corpus(tmp.path(), docs);
    let index = tmp.path().join("index");
    let out = run(&[
        "build",
        "--corpus",
        corpus.to_str().unwrap(),
        "--index",
        index.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    (tmp, index.to_str().unwrap().to_string())
}

fn json(o: &Output) -> Value {
    assert_eq!(o.status.code(), Some(0), "{}", stderr(o));
    serde_json::from_str(&stdout(o)).unwrap()
}

#[test]
fn build_reports_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = write_corpus(tmp.path(), &[("d1", "a b"), ("d2", "b c"), ("d3", "c d")]);
    let index = tmp.path().join("idx");
    let out = run(&[
        "build",
        "--corpus",
        corpus.to_str().unwrap(),
        "--index",
        index.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).trim(), "3 documents, 4 terms");
    for f in ["manifest.json", "docs.jsonl", "postings.jsonl"] {
        assert!(index.join(f).exists(), "{f}");
    }
}

#[test]
fn build_with_stopwords_keeps_positions() {
    let (_tmp, index) = {
        let tmp = tempfile::tempdir().unwrap();
        let corpus = write_corpus(tmp.path(), &[("d1", "The cat sat")]);
        let index = tmp.path().join("idx");
        let out = run(&[
            "build",
            "--corpus",
            corpus.to_str().unwrap(),
            "--index",
            index.to_str().unwrap(),
            "--stopwords",
            "the",
        ]);
        assert_eq!(out.status.code(), Some(0));
        (tmp, index)
    };
    let postings = fs::read_to_string(index.join("postings.jsonl")).unwrap();
    assert!(
        postings.contains(r#"{"term":"cat","entries":[["d1",[1]]]}"#),
        "{postings}"
    );
    assert!(!postings.contains("\"the\""));
}

#[test]
fn build_missing_corpus() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nope.jsonl");
    let out = run(&[
        "build",
        "--corpus",
        missing.to_str().unwrap(),
        "--index",
        tmp.path().join("i").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("nope.jsonl"));
}

#[test]
fn build_duplicate_id() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = write_corpus(tmp.path(), &[("d1", "a"), ("dup7", "b"), ("dup7", "c")]);
    let out = run(&[
        "build",
        "--corpus",
        corpus.to_str().unwrap(),
        "--index",
        tmp.path().join("i").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("dup7"));
}

#[test]
fn search_sole_adjacent_document() {
    let (_t, index) = indexed(&[
        ("d1", "alpha x beta"),
        ("d2", "gamma alpha beta"),
        ("d3", "beta"),
    ]);
    let v = json(&run(&[
        "search",
        "--index",
        &index,
        "--format",
        "json",
        "alpha beta",
    ]));
    let results = v["results"].as_array().unwrap();
    assert_eq!(results[0]["doc_id"], "d2");
    assert_eq!(results[0]["norm_score"], 1.0);
    assert_eq!(results[0]["span"], serde_json::json!([1, 2]));
    assert_eq!(results.len(), 2);
}

#[test]
fn search_json_round_trips() {
    let (_t, index) = indexed(&[("d1", "alpha x y beta"), ("d2", "alpha q beta alpha")]);
    let out = run(&[
        "search",
        "--index",
        &index,
        "--format",
        "json",
        "alpha beta",
    ]);
    let v = json(&out);
    let again: Value = serde_json::from_str(&serde_json::to_string(&v).unwrap()).unwrap();
    assert_eq!(v, again);
    let raw = v["results"][1]["raw_score"].as_f64().unwrap();
    assert_eq!(raw, 1.0 / (1.0 + 2f64.ln_1p()));
}

#[test]
fn search_vsm_has_no_span_column() {
    let (_t, index) = indexed(&[("d1", "alpha beta"), ("d2", "alpha"), ("d3", "other")]);
    let out = run(&["search", "--index", &index, "--model", "vsm", "alpha beta"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], "rank\tdoc_id\tscore");
    assert!(lines.iter().all(|l| l.split('\t').count() == 3));
    assert!(lines[1].starts_with("1\td1\t"));
}

#[test]
fn search_tsv_columns_are_constant() {
    let (_t, index) = indexed(&[("d1", "alpha beta"), ("d2", "alpha z z beta")]);
    for query in ["alpha beta", "alpha"] {
        let out = run(&["search", "--index", &index, query]);
        let text = stdout(&out);
        assert!(text.lines().all(|l| l.split('\t').count() == 8), "{text}");
    }
    let out = run(&["search", "--index", &index, "alpha"]);
    assert!(stdout(&out)
        .lines()
        .nth(1)
        .unwrap()
        .ends_with("\t-\t-\tfalse\ttrue"));
}

#[test]
fn search_distance_weight_changes_scores_not_order() {
    let (_t, index) = indexed(&[("near", "a x b"), ("far", "a x x x x b")]);
    let at = |s: &str| {
        let v = json(&run(&[
            "search", "--index", &index, "--format", "json", "--s", s, "a b",
        ]));
        v["results"]
            .as_array()
            .unwrap()
            .iter()
            .map(|r| {
                (
                    r["doc_id"].as_str().unwrap().to_string(),
                    r["raw_score"].as_f64().unwrap(),
                )
            })
            .collect::<Vec<_>>()
    };
    let low = at("0.5");
    let high = at("5.0");
    let order = |r: &[(String, f64)]| r.iter().map(|x| x.0.clone()).collect::<Vec<_>>();
    assert_eq!(order(&low), ["near", "far"]);
    assert_eq!(order(&low), order(&high));
    // gaps of 1 and 4 tokens: 1 / (1 + s ln 2), 1 / (1 + s ln 5)
    for (res, s) in [(&low, 0.5f64), (&high, 5.0)] {
        assert!((res[0].1 - 1.0 / (1.0 + s * 2f64.ln())).abs() < 1e-12);
        assert!((res[1].1 - 1.0 / (1.0 + s * 5f64.ln())).abs() < 1e-12);
    }
}

#[test]
fn search_empty_result_still_succeeds() {
    let (_t, index) = indexed(&[("d1", "alpha")]);
    let out = run(&["search", "--index", &index, "alpha beta"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).lines().count(), 1);
}

#[test]
fn search_budget_policy() {
    let text = "a b ".repeat(20);
    let (_t, index) = indexed(&[("d1", &text)]);
    let out = run(&["search", "--index", &index, "--budget", "100", "a b"]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    let v = json(&run(&[
        "search",
        "--index",
        &index,
        "--budget",
        "100",
        "--on-exceed",
        "approximate",
        "--format",
        "json",
        "a b",
    ]));
    assert_eq!(v["results"][0]["approximate"], true);
    assert_eq!(v["results"][0]["raw_score"], 1.0);
}

#[test]
fn search_bad_inputs() {
    let (_t, index) = indexed(&[("d1", "alpha")]);
    assert_eq!(
        run(&["search", "--index", &index, "--s", "-2", "alpha"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["search", "--index", &index, "--model", "lsi", "alpha"])
            .status
            .code(),
        Some(2)
    );
    let empty = tempfile::tempdir().unwrap();
    let out = run(&["search", "--index", empty.path().to_str().unwrap(), "alpha"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("manifest"));
    assert_eq!(run(&["search", "alpha"]).status.code(), Some(2));
}

#[test]
fn index_from_environment() {
    let (_t, index) = indexed(&[("d1", "alpha beta")]);
    let out = pqr()
        .env("PQR_INDEX", &index)
        .args(["search", "alpha beta"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).contains("\td1\t"));
}

#[test]
fn config_file_and_flag_precedence() {
    let (tmp, index) = indexed(&[("d1", "a b"), ("d2", "a b c"), ("d3", "z")]);
    let cfg = tmp.path().join("run.conf");
    fs::write(
        &cfg,
        format!("# vsm by default\nindex = {index}\nmodel = vsm\nk = 1\n"),
    )
    .unwrap();
    let out = run(&["--config", cfg.to_str().unwrap(), "search", "a b"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(stdout(&out).lines().next().unwrap(), "rank\tdoc_id\tscore");
    assert_eq!(stdout(&out).lines().count(), 2);
    let out = run(&[
        "--config",
        cfg.to_str().unwrap(),
        "search",
        "--model",
        "proximity",
        "a b",
    ]);
    assert!(stdout(&out).starts_with("rank\tdoc_id\traw_score"));
}

fn write_qrels(dir: &Path, lines: &[&str]) -> PathBuf {
    let path = dir.join("qrels.jsonl");
    fs::write(&path, lines.join("\n") + "\n").unwrap();
    path
}

#[test]
fn eval_toy_mrr() {
    let (tmp, index) = indexed(&[
        ("g0", "a b"),
        ("g1", "a x b"),
        ("g2", "a x x b"),
        ("g3", "a x x x b"),
    ]);
    let qrels = write_qrels(
        tmp.path(),
        &[
            r#"{"query": "a b", "relevant": ["g0"]}"#,
            r#"{"query": "a b", "relevant": ["g1"]}"#,
            r#"{"query": "a b", "relevant": ["g3"]}"#,
        ],
    );
    let out = run(&[
        "eval",
        "--index",
        &index,
        "--qrels",
        qrels.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.lines().nth(1).unwrap().ends_with("0.5833"), "{text}");
}

#[test]
fn eval_malformed_qrels() {
    let (tmp, index) = indexed(&[("d1", "a b")]);
    let qrels = write_qrels(
        tmp.path(),
        &[r#"{"query": "a b", "relevant": ["d1"]}"#, r#"{"query": "#],
    );
    let out = run(&[
        "eval",
        "--index",
        &index,
        "--qrels",
        qrels.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 2"), "{}", stderr(&out));
}

#[test]
fn eval_all_models_json() {
    let (tmp, index) = indexed(&[("d1", "a b"), ("d2", "a x x x x b"), ("d3", "q")]);
    let qrels = write_qrels(tmp.path(), &[r#"{"query": "a b", "relevant": ["d1"]}"#]);
    let json_out = tmp.path().join("report.json");
    let out = run(&[
        "eval",
        "--index",
        &index,
        "--qrels",
        qrels.to_str().unwrap(),
        "--all-models",
        "--format",
        "json",
        "--json-out",
        json_out.to_str().unwrap(),
    ]);
    let v = json(&out);
    let models: Vec<_> = v["reports"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["model"].as_str().unwrap())
        .collect();
    assert_eq!(models, ["vsm", "bm25-window", "proximity"]);
    assert_eq!(fs::read_to_string(json_out).unwrap(), stdout(&out));
}

#[test]
fn oracle_lists_every_passage() {
    // a at 1 and 9, b at 3
    let (_t, index) = indexed(&[("d1", "x a x b x x x x x a")]);
    let out = run(&["oracle", "--index", &index, "--doc", "d1", "a b"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    let rows: Vec<Vec<&str>> = text
        .lines()
        .skip(1)
        .map(|l| l.split('\t').collect())
        .collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][4], "a@1 b@3");
    assert_eq!(rows[1][4], "a@9 b@3");
    let score = |r: &Vec<&str>| r[1].parse::<f64>().unwrap();
    assert!((score(&rows[0]) - 0.590_616_109_149_641_2).abs() < 1e-12);
    assert!((score(&rows[1]) - 0.358_197_047_783_815_1).abs() < 1e-12);
}

#[test]
fn oracle_single_occurrences() {
    let (_t, index) = indexed(&[("d1", "a q b q c")]);
    let out = run(&[
        "oracle", "--index", &index, "--doc", "d1", "--format", "json", "c b a",
    ]);
    let v = json(&out);
    assert_eq!(v["passages"].as_array().unwrap().len(), 1);
}

#[test]
fn oracle_errors() {
    let (_t, index) = indexed(&[("d1", &"a b ".repeat(20))]);
    let out = run(&["oracle", "--index", &index, "--doc", "d1", "a zeta"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("zeta"));
    let out = run(&[
        "oracle", "--index", &index, "--doc", "d1", "--budget", "399", "a b",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let out = run(&["oracle", "--index", &index, "--doc", "nope", "a b"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["search", "--k", "many", "x"]).status.code(), Some(2));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}
