use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn wordnet_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/wordnet-3.0")
}

fn rankclust<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    Command::new(env!("CARGO_BIN_EXE_rankclust")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn evaluate_json(extra: &[&str]) -> serde_json::Value {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let mut args: Vec<std::ffi::OsString> = vec![
        "evaluate".into(),
        fixture("dataset.jsonl").into(),
        fixture("predictions.jsonl").into(),
        "--json".into(),
        out.clone().into(),
    ];
    args.extend(extra.iter().map(Into::into));
    let o = rankclust(&args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap()
}

fn cell(report: &serde_json::Value, metric: &str, k: u64) -> f64 {
    report["aggregate"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["metric"] == metric && c["k"] == k)
        .unwrap()["mean"]
        .as_f64()
        .unwrap()
}

#[test]
fn exact_report_has_manifest_and_table() {
    let o = rankclust([
        "evaluate".as_ref(),
        fixture("dataset.jsonl").as_os_str(),
        fixture("predictions.jsonl").as_os_str(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let table = stdout(&o);
    assert!(table.starts_with("Metric"), "{table}");
    assert!(table.contains("questions evaluated: 6"), "{table}");

    let report = evaluate_json(&["--no-timestamp"]);
    let manifest = &report["manifest"];
    assert_eq!(manifest["tool_version"], env!("CARGO_PKG_VERSION"));
    assert!(manifest["timestamp"].is_null());
    assert_eq!(manifest["config"]["similarity"], "exact");
    assert_eq!(manifest["inputs"]["dataset"].as_str().unwrap().len(), 64);
    assert_eq!(report["question_count"], 6);
    let ids: Vec<&str> = report["questions"].as_array().unwrap().iter().map(|q| q["id"].as_str().unwrap()).collect();
    let mut sorted = ids.clone();
    sorted.sort();
    assert_eq!(ids, sorted);

    let stamped = evaluate_json(&[]);
    assert!(stamped["manifest"]["timestamp"].is_string());
}

#[test]
fn worked_example_question_scores_in_report() {
    let report = evaluate_json(&["--max-answers", "2,3", "--max-incorrect", "1"]);
    let q = report["questions"].as_array().unwrap().iter().find(|q| q["id"] == "before_work").unwrap();
    let at2 = &q["scores"][0];
    assert_eq!((at2["metric"].as_str(), at2["k"].as_u64()), (Some("max_answers"), Some(2)));
    assert_eq!(at2["raw_reward"], 73);
    assert_eq!(at2["normalized"], 1.0);
    assert_eq!(q["scores"][1]["oracle_reward"], 83);
}

#[test]
fn wordnet_channels_outscore_exact() {
    let exact = evaluate_json(&[]);
    let small = evaluate_json(&["--similarity", "wordnet", "--lexicon", fixture("lexicon.txt").to_str().unwrap()]);
    let full = evaluate_json(&["--similarity", "wordnet", "--lexicon", wordnet_dir().to_str().unwrap()]);
    for k in [1, 3, 5, 10] {
        assert!(cell(&small, "max_answers", k) >= cell(&exact, "max_answers", k));
        assert!(cell(&full, "max_answers", k) >= cell(&exact, "max_answers", k));
    }
    assert!(cell(&small, "max_answers", 1) > cell(&exact, "max_answers", 1));
    assert_eq!(full["manifest"]["config"]["lexicon"]["version"], "3.0");
}

#[test]
fn vector_channel_runs_on_synthetic_embeddings() {
    let report = evaluate_json(&["--similarity", "vector", "--embeddings", fixture("embeddings.tsv").to_str().unwrap()]);
    assert_eq!(report["question_count"], 6);
    assert!(report["diagnostics"]["missing_embeddings"].as_array().unwrap().is_empty());
    assert_eq!(report["manifest"]["config"]["gp"]["lengthscale"], "median");
    let fixed = evaluate_json(&[
        "--similarity",
        "vector",
        "--embeddings",
        fixture("embeddings.tsv").to_str().unwrap(),
        "--lengthscale",
        "0.5",
    ]);
    assert_eq!(fixed["manifest"]["config"]["gp"]["lengthscale"], "0.5");
}

#[test]
fn missing_predictions_exit_2() {
    let o = rankclust([
        "evaluate".as_ref(),
        fixture("dataset.jsonl").as_os_str(),
        fixture("predictions_half.jsonl").as_os_str(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("car_trouble: no prediction"), "{err}");
    assert!(err.contains("not in dataset"), "{err}");
    assert!(stdout(&o).contains("questions evaluated: 3"));
}

#[test]
fn missing_resources_and_bad_input_exit_1() {
    let o = rankclust([
        "evaluate".as_ref(),
        fixture("dataset.jsonl").as_os_str(),
        fixture("predictions.jsonl").as_os_str(),
        "--similarity".as_ref(),
        "wordnet".as_ref(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--lexicon"));

    let o = rankclust(["evaluate".as_ref(), fixture("gold.json").as_os_str(), fixture("predictions.jsonl").as_os_str()]);
    assert_eq!(o.status.code(), Some(1));

    let o = rankclust(["evaluate", "--max-answers", "0", "a", "b"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(rankclust(["frobnicate"]).status.code(), Some(1));
    assert_eq!(rankclust(["--help"]).status.code(), Some(0));
    assert_eq!(rankclust(["--version"]).status.code(), Some(0));
}

#[test]
fn table_file_written() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("table.txt");
    let o = rankclust([
        "evaluate".as_ref(),
        fixture("dataset.jsonl").as_os_str(),
        fixture("predictions.jsonl").as_os_str(),
        "--table".as_ref(),
        table.as_os_str(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(table).unwrap(), stdout(&o));
}

#[test]
fn validate_exit_codes() {
    let o = rankclust(["validate".as_ref(), fixture("dataset.jsonl").as_os_str()]);
    assert_eq!(o.status.code(), Some(0));
    let o = rankclust(["validate".as_ref(), fixture("validate_fail.jsonl").as_os_str()]);
    assert_eq!(o.status.code(), Some(3));
    let out = stdout(&o);
    assert!(out.contains("strong\tpass"), "{out}");
    assert!(out.contains("weak\tFAIL\ttop8=84\ttotal=100"), "{out}");
}

#[test]
fn blanc_prints_percentages() {
    let o = rankclust(["blanc".as_ref(), fixture("gold.json").as_os_str(), fixture("gold.json").as_os_str()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).lines().any(|l| l == "100.00"));
    let o = rankclust(["blanc".as_ref(), fixture("gold.json").as_os_str(), fixture("response.json").as_os_str()]);
    assert!(stdout(&o).lines().any(|l| l == "25.00"));
    let o = rankclust(["blanc".as_ref(), fixture("gold.json").as_os_str(), fixture("disjoint.json").as_os_str()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("common item"));
}

#[test]
fn coverage_counts_linked_clusters() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("coverage.json");
    let o = rankclust([
        "coverage".as_ref(),
        fixture("coverage_dataset.jsonl").as_os_str(),
        fixture("triples.tsv").as_os_str(),
        "--json".as_ref(),
        json.as_os_str(),
        "--no-timestamp".as_ref(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("covered 3 of 4 clusters: 75.0%"));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(json).unwrap()).unwrap();
    assert!(report["manifest"]["inputs"]["triples"].is_string());
}

#[test]
fn transform_rewrites_each_line() {
    let o = rankclust(["transform".as_ref(), fixture("questions.txt").as_os_str()]);
    assert_eq!(o.status.code(), Some(0));
    let prompts: Vec<String> = stdout(&o).lines().map(str::to_string).collect();
    assert_eq!(prompts.len(), 6);
    assert_eq!(prompts[0], "One thing people do when they wake up is");
    assert_eq!(prompts[1], "One vegetable is");
    assert!(stderr(&o).contains("1 question(s) matched no rewrite rule"));

    let dir = tempfile::tempdir().unwrap();
    let again = dir.path().join("prompts.txt");
    std::fs::write(&again, stdout(&o)).unwrap();
    let o2 = rankclust(["transform".as_ref(), again.as_os_str()]);
    assert_eq!(stdout(&o2), stdout(&o));
}
