//! End-to-end runs of the `zsar` binary.

mod common;

use std::fs;
use std::path::Path;

use serde_json::Value;
use zsar_core::dataset::{load_dataset, save_dataset};

use common::{path, planted, zsar};

fn stderr(out: &std::process::Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn synth(dir: &Path, spec: &str) -> std::path::PathBuf {
    let spec_path = dir.join("spec.json");
    fs::write(&spec_path, spec).unwrap();
    let data = dir.join("data");
    let out = zsar(&["synth-data", "--spec", path(&spec_path), "--out", path(&data)]);
    assert!(out.status.success(), "{}", stderr(&out));
    data
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn fit_writes_artifact_with_small_residuals_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (ds, _) = planted(3, 60, 20, 0.0);
    let data = dir.path().join("data");
    save_dataset(&data, &ds).unwrap();
    let seen = (0..20).map(|c| c.to_string()).collect::<Vec<_>>().join(",");
    let mut artifacts = Vec::new();
    for run in 0..2 {
        let model = dir.path().join(format!("model{run}.zspm"));
        let summary = dir.path().join(format!("summary{run}.json"));
        let out = zsar(&[
            "fit", "--data-dir", path(&data), "--seen", &seen, "--out", path(&model), "--summary", path(&summary),
        ]);
        assert!(out.status.success(), "{}", stderr(&out));
        let s = read_json(&summary);
        for key in ["mean", "log_var"] {
            let r = s["residuals"][key].as_f64().unwrap_or_else(|| panic!("residual {key} in {s}"));
            assert!(r <= 1e-8, "{key} residual {r}");
        }
        assert_eq!(s["seen_classes"].as_array().unwrap().len(), 20);
        artifacts.push(fs::read(&model).unwrap());
    }
    assert_eq!(artifacts[0], artifacts[1]);
}

#[test]
fn missing_attributes_file_exits_2_naming_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), r#"{"n_classes": 6, "examples_per_class": 10}"#);
    let missing = dir.path().join("nowhere/attrs.csv");
    let out = zsar(&[
        "fit", "--data-dir", path(&data), "--attributes", path(&missing), "--out",
        path(&dir.path().join("m.zspm")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains(path(&missing)), "{}", stderr(&out));
}

#[test]
fn error_json_reports_kind_and_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent");
    let out = zsar(&["--error-json", "eval", "--data-dir", path(&missing), "--regime", "zsl", "--out", "r.json"]);
    assert_eq!(out.status.code(), Some(2));
    let v: Value = serde_json::from_str(stderr(&out).trim()).unwrap();
    assert_eq!(v["error"]["exit_code"], 2);
    assert!(v["error"]["kind"].is_string());
    assert!(v["error"]["message"].as_str().unwrap().contains("absent"));
}

#[test]
fn bad_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), r#"{"n_classes": 6, "examples_per_class": 10}"#);
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"n_splits": 2, "no_such_field": true}"#).unwrap();
    let report = dir.path().join("r.json");
    let out = zsar(&["eval", "--data-dir", path(&data), "--config", path(&cfg), "--regime", "zsl", "--out", path(&report)]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    let out = zsar(&["eval", "--data-dir", path(&data), "--regime", "zsl", "--lambda-mu", "-1", "--out", path(&report)]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    let out = zsar(&["eval", "--data-dir", path(&data), "--regime", "bogus", "--out", path(&report)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn few_shot_eval_reports_each_requested_shot_count() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), r#"{"n_classes": 12, "examples_per_class": 30, "seed": 1}"#);
    let report = dir.path().join("fs.json");
    let out = zsar(&[
        "eval", "--data-dir", path(&data), "--regime", "few-shot", "--shots", "2,3,4,5", "--n-splits", "3", "--out",
        path(&report),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let v = read_json(&report);
    for split in v["per_split"].as_array().unwrap() {
        let shots: Vec<u64> = split["few_shot"].as_array().unwrap().iter().map(|s| s["shots"].as_u64().unwrap()).collect();
        assert_eq!(shots, [2, 3, 4, 5]);
    }
    let agg = v["aggregate"].as_object().unwrap();
    let cols = agg.keys().filter(|k| k.starts_with("few_shot_") && !k.ends_with("_instance")).count();
    assert_eq!(cols, 4);
    let csv = fs::read_to_string(report.with_extension("csv")).unwrap();
    assert!(csv.lines().any(|l| l.starts_with("0,few_shot_5_acc,")));
}

#[test]
fn gzsl_eval_report_has_seen_unseen_and_harmonic_mean() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), r#"{"n_classes": 10, "examples_per_class": 30, "seed": 2}"#);
    let report = dir.path().join("g.json");
    let out = zsar(&[
        "eval", "--data-dir", path(&data), "--regime", "gzsl", "--n-splits", "2", "--synth-count", "40", "--out",
        path(&report),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let v = read_json(&report);
    assert_eq!(v["regime"], "gzsl");
    for key in ["seen_acc", "unseen_acc", "harmonic_mean"] {
        assert!(v["aggregate"][key]["mean"].is_number(), "{key}");
        for split in v["per_split"].as_array().unwrap() {
            assert!(split[key].is_number(), "{key}");
        }
    }
    assert_eq!(v["config_echo"]["config"]["synth_count"], 40);
}

#[test]
fn thirty_splits_give_thirty_rows() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), r#"{"n_classes": 16, "examples_per_class": 12, "seed": 4}"#);
    let report = dir.path().join("z.json");
    let out = zsar(&[
        "eval", "--data-dir", path(&data), "--regime", "zsl", "--n-splits", "30", "--n-seen", "8", "--out",
        path(&report),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let v = read_json(&report);
    assert_eq!(v["per_split"].as_array().unwrap().len(), 30);
    assert_eq!(v["config_echo"]["splits"].as_array().unwrap().len(), 30);
    let csv = fs::read_to_string(report.with_extension("csv")).unwrap();
    let ids: std::collections::BTreeSet<&str> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(ids.len(), 30);
}

#[test]
fn synth_data_defaults_load_and_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let mut bytes = Vec::new();
    for run in 0..2 {
        let out_dir = dir.path().join(format!("d{run}"));
        let out = zsar(&["synth-data", "--out", path(&out_dir)]);
        assert!(out.status.success(), "{}", stderr(&out));
        let ds = load_dataset(
            &out_dir.join("features.zsar"),
            &out_dir.join("labels.csv"),
            &out_dir.join("attributes.csv"),
        )
        .unwrap();
        assert_eq!((ds.n_examples(), ds.n_classes(), ds.feature_dim(), ds.attribute_dim()), (2500, 25, 16, 8));
        let files: Vec<Vec<u8>> = ["features.zsar", "labels.csv", "attributes.csv", "ground_truth.json"]
            .iter()
            .map(|f| fs::read(out_dir.join(f)).unwrap())
            .collect();
        bytes.push(files);
    }
    assert_eq!(bytes[0], bytes[1]);
}

#[test]
fn near_noiseless_linear_world_is_classified_perfectly() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(
        dir.path(),
        r#"{"n_classes": 12, "examples_per_class": 20, "noise_scale": 1e-6, "attribute_scheme": "random_unit", "seed": 8}"#,
    );
    let report = dir.path().join("r.json");
    let out = zsar(&["eval", "--data-dir", path(&data), "--regime", "zsl", "--kernel", "linear", "--n-splits", "3", "--out", path(&report)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let v = read_json(&report);
    for split in v["per_split"].as_array().unwrap() {
        assert_eq!(split["unseen_acc"], 1.0, "{split}");
    }
}
