use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn corpus() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/corpus")
}

fn contragen(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_contragen"))
        .args(args)
        .env_remove("CONTRAGEN_SEED")
        .output()
        .unwrap()
}

fn giftpack() -> String {
    corpus().join("giftpack.sub").to_string_lossy().into_owned()
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(contragen(&["--help"]).status.code(), Some(0));
    assert_eq!(contragen(&[]).status.code(), Some(1));
    assert_eq!(contragen(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(
        contragen(&["generate", &giftpack(), "--budget-generations", "5", "--budget-seconds", "5"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn bad_inputs_exit_with_two() {
    assert_eq!(contragen(&["extract", "/nonexistent/x.sub"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.sub");
    std::fs::write(&bad, "class {").unwrap();
    let out = contragen(&["extract", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.sub"));
    let empty = tempfile::tempdir().unwrap();
    assert_eq!(
        contragen(&["experiment", empty.path().to_str().unwrap()]).status.code(),
        Some(2)
    );
    assert_eq!(
        contragen(&["generate", &giftpack(), "--population", "1"]).status.code(),
        Some(2)
    );
}

#[test]
fn extract_prints_contracts() {
    let out = contragen(&["extract", &giftpack()]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let contracts = v["contracts"].as_array().unwrap();
    assert_eq!(contracts.len(), 6);
    assert_eq!(contracts[1]["id"], "GiftPack.unwrapAndSave/post0");
    assert!(v["skipped"].as_array().unwrap().is_empty());

    let sensor = corpus().join("sensor.sub");
    let v: serde_json::Value = serde_json::from_slice(&contragen(&["extract", sensor.to_str().unwrap()]).stdout).unwrap();
    assert!(!v["skipped"].as_array().unwrap().is_empty());
}

#[test]
fn generate_writes_the_suite_layout() {
    let dir = tempfile::tempdir().unwrap();
    let out = contragen(&["generate", &giftpack(), "--seed", "3", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let unit = dir.path().join("GiftPack");
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(unit.join("manifest.json")).unwrap()).unwrap();
    let entries = manifest.as_array().unwrap();
    assert_eq!(entries.len(), 5);
    for e in entries {
        let file = unit.join(e["file"].as_str().unwrap());
        let body = std::fs::read_to_string(file).unwrap();
        assert!(body.contains(&format!("void {}()", e["name"].as_str().unwrap())));
    }
    assert!(unit.join("testUnwrapAndSave_EmptyExIfGiftIsNull.subtest").is_file());
    let progress = std::fs::read_to_string(dir.path().join("progress.jsonl")).unwrap();
    assert!(progress.lines().count() > 0);
}

#[test]
fn seed_comes_from_the_environment() {
    let run = |env: Option<&str>, args: &[&str]| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_contragen"));
        c.args(["generate", &giftpack(), "--budget-generations", "5"]).args(args);
        match env {
            Some(s) => c.env("CONTRAGEN_SEED", s),
            None => c.env_remove("CONTRAGEN_SEED"),
        };
        c.output().unwrap().stdout
    };
    assert_eq!(run(Some("42"), &[]), run(None, &["--seed", "42"]));
    assert_eq!(run(None, &[]), run(None, &[]));
}

#[test]
fn coverage_mode_emits_json() {
    let out = contragen(&["generate", &giftpack(), "--mode", "coverage", "--budget-generations", "5"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["contracts"].as_array().unwrap().len(), 5);
    assert!(v["tests"].is_array());
}

#[test]
fn experiment_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let corpus_dir = tempfile::tempdir().unwrap();
    std::fs::copy(corpus().join("range.sub"), corpus_dir.path().join("range.sub")).unwrap();
    let out = contragen(&[
        "experiment",
        corpus_dir.path().to_str().unwrap(),
        "--reps",
        "2",
        "--budget-generations",
        "5",
        "--report",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("report.txt")).unwrap();
    assert_eq!(text, String::from_utf8_lossy(&out.stdout));
    assert!(dir.path().join("report.json").is_file());
    assert!(dir.path().join("report.csv").is_file());
}
