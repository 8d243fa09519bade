mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::fixtures;
use serde_json::Value;

fn vecrefine(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vecrefine")).args(args).output().expect("binary runs")
}

fn fixture_arg(rel: &str) -> String {
    fixtures().join(rel).display().to_string()
}

fn run_fixture(out: &Path) -> Output {
    vecrefine(&["run", "--manifest", &fixture_arg("run_fixture.toml"), "--out", &out.display().to_string()])
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn fixture_run_then_report_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_fixture(dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("coverage: 1/3"), "{stdout}");

    let report = read_json(&dir.path().join("report.json"));
    let rows = report["cases"].as_array().unwrap();
    let ids: Vec<&str> = rows.iter().map(|r| r["case_id"].as_str().unwrap()).collect();
    assert_eq!(ids, ["s1113", "s442", "s481"]);
    assert_eq!(report["attempted"], 3);
    assert_eq!(report["vectorized"], 1);
    assert!(dir.path().join("manifest.resolved.toml").is_file());
    for id in ids {
        assert!(dir.path().join(id).join("outcome.json").is_file());
    }

    let before = std::fs::read_to_string(dir.path().join("summary.txt")).unwrap();
    let again = vecrefine(&["report", &dir.path().display().to_string()]);
    assert_eq!(again.status.code(), Some(0), "{}", String::from_utf8_lossy(&again.stderr));
    let after = std::fs::read_to_string(dir.path().join("summary.txt")).unwrap();
    assert_eq!(before, after);
}

#[test]
fn report_rejects_other_schema_versions() {
    let dir = tempfile::tempdir().unwrap();
    let case = dir.path().join("s1113");
    std::fs::create_dir_all(&case).unwrap();
    std::fs::write(case.join("outcome.json"), r#"{"schema_version": 0, "case_id": "s1113"}"#).unwrap();
    let out = vecrefine(&["report", &dir.path().display().to_string()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("schema version 0"));
}

#[test]
fn report_on_empty_archive_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(vecrefine(&["report", &dir.path().display().to_string()]).status.code(), Some(2));
}

#[test]
fn missing_compiler_exits_three() {
    let out = vecrefine(&["run", "--manifest", &fixture_arg("run_fixture.toml"), "--compiler", "/nonexistent/clang"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn missing_transcript_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = vecrefine(&[
        "run",
        "--corpus",
        &fixture_arg("tsvc.c"),
        "--only",
        "s000",
        "--llm",
        &format!("replay:{}", fixture_arg("transcripts")),
        "--out",
        &dir.path().display().to_string(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no transcript in"));
}

#[test]
fn bare_provider_spec_is_rejected() {
    let out = vecrefine(&["run", "--corpus", &fixture_arg("tsvc.c"), "--llm", "transcripts", "--dry-run"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unrecognized provider"));
}

#[test]
fn unknown_flag_exits_two() {
    assert_eq!(vecrefine(&["run", "--frobnicate"]).status.code(), Some(2));
}

#[test]
fn dry_run_prints_the_resolved_manifest() {
    let out = vecrefine(&["run", "--manifest", &fixture_arg("run_fixture.toml"), "--dry-run", "--max-rounds", "7"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let v: toml::Value = toml::from_str(&text).unwrap();
    assert_eq!(v["budgets"]["max_rounds"].as_integer(), Some(7));
    assert_eq!(v["parallelism"].as_integer(), Some(2));
}

#[test]
fn validate_tests_labels_fixture_suites() {
    let out = vecrefine(&[
        "validate-tests",
        "--corpus",
        &fixture_arg("tsvc.c"),
        "--only",
        "s1113",
        "--suite",
        &fixture_arg("suites/valid/s1113_generated.c"),
        "--suite",
        &fixture_arg("suites/invalid/i02_wrong_array.c"),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().filter(|l| l.starts_with("s1113:")).collect();
    assert_eq!(lines.len(), 2, "{text}");
    assert!(lines[0].ends_with("VALID"));
    assert!(lines[1].contains("INVALID (sensitivity"));
}

#[test]
fn bench_subcommand_times_a_candidate() {
    let out = vecrefine(&[
        "bench",
        "--corpus",
        &fixture_arg("tsvc.c"),
        "--only",
        "s1113",
        "--candidate",
        &fixture_arg("candidates/s1113_opt.c"),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("checksum match"), "{text}");
}
