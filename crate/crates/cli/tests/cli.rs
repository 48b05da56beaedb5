use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_fieldst"));
    c.env_remove("FIELDST_SEED");
    c
}

fn run(args: &[&str]) -> Output {
    let out = bin().args(args).output().expect("spawn fieldst");
    assert!(
        out.status.success(),
        "fieldst {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Tiny dataset plus a small-network config.
fn setup(dir: &Path) -> (PathBuf, PathBuf) {
    let data = dir.join("data").join("ds.fsrd");
    let gen = dir.join("gen.json");
    fs::write(&gen, r#"{"grid": {"rows": 12, "cols": 12}, "max_sources": 3}"#).unwrap();
    run(&[
        "gen-data", "--out", s(&data), "--config", s(&gen), "--labeled", "6", "--unlabeled", "8", "--test", "4",
        "--sensors", "4", "--seed", "3",
    ]);
    let cfg = dir.join("train.json");
    fs::write(&cfg, r#"{"hidden": [8], "epochs": 3, "batch_size": 4, "ensemble_size": 2}"#).unwrap();
    (data, cfg)
}

#[test]
fn bad_flags_fail() {
    assert!(!bin().args(["train", "--bogus"]).output().unwrap().status.success());
    assert!(!bin().args(["frobnicate"]).output().unwrap().status.success());
    assert!(!bin()
        .args(["train", "--data", "x", "--out", "y", "--method", "nope"])
        .output().unwrap().status.success());
}

#[test]
fn missing_dataset_fails() {
    let dir = TempDir::new().unwrap();
    let out = bin()
        .args(["eval", "--data", s(&dir.path().join("none.fsrd")), "--checkpoint", "x.fsnn"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn dump_config_applies_overrides_and_env() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{"epochs": 7, "seed": 4}"#).unwrap();
    let out = run(&[
        "train", "--data", "d", "--out", "o", "--config", s(&cfg), "--method", "self-training", "--batch", "2",
        "--no-uncertainty", "--dump-config",
    ]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["epochs"], 7);
    assert_eq!(v["seed"], 4);
    assert_eq!(v["batch_size"], 2);
    assert_eq!(v["method"], "self-training");
    assert_eq!(v["use_uncertainty"], false);

    let out = bin()
        .env("FIELDST_SEED", "42")
        .args(["train", "--data", "d", "--out", "o", "--dump-config"])
        .output()
        .unwrap();
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["seed"], 42);
}

#[test]
fn gen_data_is_deterministic() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let (da, _) = setup(a.path());
    let (db, _) = setup(b.path());
    assert_eq!(fs::read(&da).unwrap(), fs::read(&db).unwrap());
    assert!(da.with_extension("json").exists());
}

#[test]
fn train_eval_export() {
    let dir = TempDir::new().unwrap();
    let (data, cfg) = setup(dir.path());
    let out = dir.path().join("sup");
    run(&["train", "--data", s(&data), "--out", s(&out), "--config", s(&cfg), "--method", "supervised", "--labels", "4"]);
    let model = out.join("model.fsnn");
    assert!(model.exists());
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "train");
    assert!(manifest["metrics"]["test_mae"].as_f64().unwrap() >= 0.0);

    let ev = run(&["eval", "--data", s(&data), "--checkpoint", s(&model)]);
    let text = String::from_utf8(ev.stdout).unwrap();
    let mae: f64 = text.trim().strip_prefix("mae ").unwrap().parse().unwrap();
    assert_eq!(mae, manifest["metrics"]["test_mae"].as_f64().unwrap());

    let pgm = dir.path().join("maps").join("err.pgm");
    run(&["export", "--data", s(&data), "--checkpoint", s(&model), "--format", "pgm", "--out", s(&pgm)]);
    assert!(fs::read_to_string(&pgm).unwrap().starts_with("P2\n12 12\n255\n"));

    let csv = dir.path().join("truth.csv");
    run(&["export", "--data", s(&data), "--kind", "truth", "--sample", "1", "--out", s(&csv)]);
    let rows = fs::read_to_string(&csv).unwrap();
    assert_eq!(rows.lines().count(), 12);

    assert!(!bin()
        .args(["export", "--data", s(&data), "--kind", "error", "--out", s(&csv)])
        .output().unwrap().status.success());
}

#[test]
fn uge_st_run_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let (data, cfg) = setup(dir.path());
    let runs: Vec<PathBuf> = ["r1", "r2"].iter().map(|r| dir.path().join(r)).collect();
    for out in &runs {
        run(&["train", "--data", s(&data), "--out", s(out), "--config", s(&cfg), "--jobs", "2"]);
    }
    for file in [
        "teachers/member_0.fsnn",
        "teachers/member_1.fsnn",
        "pseudo/labels.fsrd-pl",
        "student_pretrained.fsnn",
        "student_final.fsnn",
        "config.json",
        "manifest.json",
    ] {
        let a = fs::read(runs[0].join(file)).unwrap();
        let b = fs::read(runs[1].join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between runs");
    }
}

#[test]
fn protocol_and_ablation_outputs() {
    let dir = TempDir::new().unwrap();
    let (data, cfg) = setup(dir.path());
    let out = dir.path().join("proto");
    run(&[
        "protocol", "--data", s(&data), "--out", s(&out), "--config", s(&cfg), "--budgets", "2,4", "--methods",
        "supervised,uge-st", "--seeds", "1,2",
    ]);
    let csv = fs::read_to_string(out.join("results.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("method,budget,seed,mae"));
    assert_eq!(lines.count(), 8);
    let summary: serde_json::Value = serde_json::from_slice(&fs::read(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["dataset_sha256"].as_str().unwrap().len(), 64);

    let abl = dir.path().join("abl");
    run(&[
        "ablate", "ensemble", "--data", s(&data), "--out", s(&abl), "--config", s(&cfg), "--sizes", "1,2", "--seeds", "1",
    ]);
    let v: serde_json::Value = serde_json::from_slice(&fs::read(abl.join("ablation_ensemble.json")).unwrap()).unwrap();
    assert_eq!(v["aggregate"].as_array().unwrap().len(), 2);
    run(&["ablate", "pretrain", "--data", s(&data), "--out", s(&abl), "--config", s(&cfg), "--seeds", "1"]);
    assert!(abl.join("ablation_pretrain.json").exists());
    assert!(!bin().args(["ablate", "sideways", "--data", s(&data), "--out", s(&abl)]).output().unwrap().status.success());
}
