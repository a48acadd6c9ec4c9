mod support;

use std::fs;

use corpusprep::pipeline::{run_stage, ConfigError, PipelineConfig, PipelineError, Stage};
use support::fixture;

fn cfg_with(paths: &[(&str, std::path::PathBuf)]) -> PipelineConfig {
    let mut cfg = PipelineConfig::parse(&support::read_fixture("pipeline.conf")).unwrap();
    for (k, v) in paths {
        cfg.paths.insert(k.to_string(), v.clone());
    }
    cfg
}

#[test]
fn eval_conllu_hand_counted() {
    let cfg = cfg_with(&[("gold", fixture("gold.conllu")), ("pred", fixture("pred.conllu"))]);
    let r = run_stage(Stage::Eval, &cfg).unwrap();
    let d = &r.details;
    assert_eq!(d["tokens"], 9);
    assert!((d["upos"].as_f64().unwrap() - 8.0 / 9.0).abs() < 1e-12);
    assert!((d["uas"].as_f64().unwrap() - 8.0 / 9.0).abs() < 1e-12);
    assert!((d["las"].as_f64().unwrap() - 7.0 / 9.0).abs() < 1e-12);
}

#[test]
fn eval_conll_hand_counted() {
    let cfg = cfg_with(&[("gold", fixture("gold.conll")), ("pred", fixture("pred.conll"))]);
    let r = run_stage(Stage::Eval, &cfg).unwrap();
    let d = &r.details;
    assert_eq!((d["correct"].as_u64(), d["gold_mentions"].as_u64(), d["pred_mentions"].as_u64()), (Some(1), Some(4), Some(3)));
    assert!((d["precision"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-12);
    assert!((d["recall"].as_f64().unwrap() - 0.25).abs() < 1e-12);
}

#[test]
fn missing_paths_are_config_errors() {
    let cfg = cfg_with(&[("input", fixture("corpus.jsonl"))]);
    let err = run_stage(Stage::Clean, &cfg).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    match err {
        PipelineError::Config(ConfigError::Invalid { key, .. }) => assert_eq!(key, "paths.output"),
        other => panic!("unexpected {other:?}"),
    }
    let cfg = cfg_with(&[("input", fixture("corpus.jsonl"))]);
    let err = run_stage(Stage::LangTrain, &cfg).unwrap_err();
    assert!(err.to_string().contains("lang.samples"), "{err}");
}

#[test]
fn processing_errors_leave_nothing_behind() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.jsonl");
    fs::write(&bad, "{\"id\": \"a\", \"text\": \"hyvä teksti\"}\nnot json\n").unwrap();
    let out = dir.path().join("out.jsonl");
    let cfg = cfg_with(&[("input", bad), ("output", out.clone())]);
    let err = run_stage(Stage::Clean, &cfg).unwrap_err();
    assert_eq!(err.exit_code(), 1);
    assert!(err.to_string().contains("line 2"), "{err}");
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn stats_counts_every_document() {
    let cfg = cfg_with(&[("input", fixture("corpus.jsonl"))]);
    let r = run_stage(Stage::Stats, &cfg).unwrap();
    assert_eq!(r.input_docs, Some(39));
    assert!(r.text.unwrap().contains("Total"));
}

#[test]
fn split_is_balanced_and_disjoint() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = cfg_with(&[("input", fixture("corpus.jsonl")), ("output", dir.path().to_path_buf())]);
    let r = run_stage(Stage::Split, &cfg).unwrap();
    assert_eq!((r.details["train"].as_u64(), r.details["dev"].as_u64(), r.details["test"].as_u64()), (Some(6), Some(2), Some(2)));
    let mut ids = std::collections::HashSet::new();
    for part in ["train", "dev", "test"] {
        let text = fs::read_to_string(dir.path().join(format!("{part}.jsonl"))).unwrap();
        for line in text.lines() {
            let v: serde_json::Value = serde_json::from_str(line).unwrap();
            assert!(ids.insert(v["id"].as_str().unwrap().to_string()));
        }
    }
}
