use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const MODEL: &str = "process \"Order\"\n  task \"A\"\n  task \"B\"\n  task \"D\"\n";

fn cpmr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cpmr"))
        .args(args)
        .env_remove("CPMR_LLM_ENDPOINT")
        .env_remove("CPMR_LLM_MODEL")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

#[test]
fn validate_reports_and_never_writes() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(dir.path(), "good.cpm", MODEL);
    let o = cpmr(&["validate", &good]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let dup_text = "process \"P\"\n  task \"A\"\n  task \"A\"\n";
    let dup = write(dir.path(), "dup.cpm", dup_text);
    let o = cpmr(&["validate", &dup]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("DuplicateLabel"), "{}", stderr(&o));
    assert_eq!(std::fs::read_to_string(&dup).unwrap(), dup_text);

    let o = cpmr(&["--json", "validate", &dup]);
    assert_eq!(o.status.code(), Some(1));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["valid"], false);
    assert_eq!(v["diagnostics"][0]["code"], "DuplicateLabel");

    let bad = write(dir.path(), "bad.cpm", "process \"P\"\n  tsk \"A\"\n");
    let o = cpmr(&["validate", &bad]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 2"));
}

#[test]
fn fmt_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let messy = write(dir.path(), "m.cpm", "process   \"Order\"\n  task \"A\"\n\n  task    \"B\"\n  task \"D\"");
    let o = cpmr(&["fmt", &messy]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o), MODEL);

    assert_eq!(cpmr(&["fmt", "--check", &messy]).status.code(), Some(1));
    assert_eq!(cpmr(&["fmt", "--write", &messy]).status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(&messy).unwrap(), MODEL);
    assert_eq!(cpmr(&["fmt", "--check", &messy]).status.code(), Some(0));
    assert_eq!(stdout(&cpmr(&["fmt", &messy])), MODEL);
}

#[test]
fn apply_pattern_prints_new_model() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(dir.path(), "m.cpm", MODEL);
    let meaning = r#"{"pattern":"cp1","params":{"new_label":"C","position":{"after":{"label":"B"}}}}"#;
    let o = cpmr(&["apply-pattern", &m, "--meaning", meaning]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o), "process \"Order\"\n  task \"A\"\n  task \"B\"\n  task \"C\"\n  task \"D\"\n");

    let file = write(dir.path(), "meaning.json", r#"{"pattern":"cp2","params":{"label":"B"}}"#);
    let o = cpmr(&["--json", "apply-pattern", &m, "--meaning", &format!("@{file}")]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["pattern"], "cp2");
    assert_eq!(v["model"], "process \"Order\"\n  task \"A\"\n  task \"D\"\n");

    let o = cpmr(&["apply-pattern", &m, "--meaning", r#"{"pattern":"cp2","params":{"label":"Z"}}"#]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("Z"));
    let o = cpmr(&["apply-pattern", &m, "--meaning", "not json"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn redesign_with_mock() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(dir.path(), "m.cpm", MODEL);
    let log = dir.path().join("t.jsonl");
    let o = cpmr(&[
        "redesign",
        &m,
        "--request",
        "Add task C after task B",
        "--mode",
        "cpmr",
        "--backend",
        "mock",
        "--transcript",
        log.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.starts_with("(T,·,T,·) cp1"), "{out}");
    assert!(out.ends_with("  task \"B\"\n  task \"C\"\n  task \"D\"\n"));
    assert_eq!(std::fs::read_to_string(&log).unwrap().lines().count(), 3);

    let o = cpmr(&["--json", "redesign", &m, "--request", "Swap task A and task B", "--mode", "baseline"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["approach"], "baseline");
    assert_eq!(v["model"], "process \"Order\"\n  task \"B\"\n  task \"A\"\n  task \"D\"\n");

    let o = cpmr(&["redesign", &m, "--request", "Make it nicer"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).starts_with("(F,·,·,·)"));
}

#[test]
fn llm_backend_without_configuration_is_a_domain_error() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(dir.path(), "m.cpm", MODEL);
    let o = cpmr(&["redesign", &m, "--request", "Delete task B", "--backend", "llm"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("CPMR_LLM_ENDPOINT"));
}

#[test]
fn compare_models() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a.cpm", MODEL);
    let b = write(dir.path(), "b.cpm", "process \"Order\"\n  task \"A\"\n  task \"D\"\n  task \"B\"\n");
    assert_eq!(stdout(&cpmr(&["compare", &a, &a])), "1.0 equal\n");
    let o = cpmr(&["compare", &a, &b]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).trim_end().ends_with(" different"));
    let v: Value = serde_json::from_str(&stdout(&cpmr(&["--json", "compare", &a, &b]))).unwrap();
    assert!(v["similarity"].as_f64().unwrap() < 1.0);
    assert_eq!(v["equal"], false);
}

#[test]
fn eval_writes_reports() {
    let out = tempfile::tempdir().unwrap();
    let survey = fixtures().join("survey");
    let o = cpmr(&["eval", survey.to_str().unwrap(), "--format", "csv", "--out", out.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for name in ["pattern_rates.csv", "predominant_alternatives.csv", "reason_rollup.csv", "agreement.csv"] {
        assert!(out.path().join(name).is_file(), "{name}");
    }
    let rates = std::fs::read_to_string(out.path().join("pattern_rates.csv")).unwrap();
    assert_eq!(rates.lines().count(), 1 + 19 * 2);
    assert!(rates.contains("cp1,mock,1,1.000000,1.000000,1.000000,0.000000"));
    let agreement = std::fs::read_to_string(out.path().join("agreement.csv")).unwrap();
    assert!(agreement.contains("mock,19,1.000000"));

    let o = cpmr(&["eval", survey.to_str().unwrap(), "--mode", "baseline"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("Baseline / pipeline agreement"));
    assert!(text.lines().any(|l| l.starts_with("cp1    mock") && l.contains("100.0%") && l.contains(" -")), "{text}");

    let o = cpmr(&["eval", out.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("records.csv"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(cpmr(&[]).status.code(), Some(2));
    assert_eq!(cpmr(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(cpmr(&["redesign", "m.cpm"]).status.code(), Some(2));
    assert_eq!(cpmr(&["redesign", "m.cpm", "--request", "x", "--mode", "fast"]).status.code(), Some(2));
    assert_eq!(cpmr(&["serve", "--port", "high"]).status.code(), Some(2));
    assert_eq!(cpmr(&["--help"]).status.code(), Some(0));
}
