use std::path::Path;
use std::process::{Command, Output};

use woe_core::dataset::{write_concepts, write_csv};
use woe_core::persistence::ModelDocument;
use woe_core::synthetic::{dermoscopy_concepts, ClassSpec, MixtureSpec};
use woe_service::{
    ConditionPolicy, CreateSession, ExportDocument, ManualClock, ServiceConfig, StudyService, SubmitDecision,
    TaskPool,
};

fn woe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_woe")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn separated(dir: &Path) -> String {
    let spec = MixtureSpec::new(vec![
        ClassSpec::isotropic(vec![0.0, 0.0, 0.0], 0.5, 1.0),
        ClassSpec::isotropic(vec![6.0, 0.0, 0.0], 0.5, 1.0),
        ClassSpec::isotropic(vec![0.0, 6.0, 3.0], 0.5, 1.0),
    ]);
    let path = dir.join("train.csv");
    write_csv(&spec.sample_per_class(60, 3).unwrap(), &path, "label").unwrap();
    path.display().to_string()
}

fn overlapping(dir: &Path) -> String {
    let path = dir.join("pool.csv");
    write_csv(&MixtureSpec::random(3, 3, 1.0, 4).sample(3000, 5).unwrap(), &path, "label").unwrap();
    path.display().to_string()
}

fn fit(dir: &Path, data: &str) -> String {
    let model = dir.join("model.json").display().to_string();
    stdout(&woe(&["fit", "--data", data, "--out", &model]));
    model
}

#[test]
fn fit_then_classify_training_points() {
    let dir = tempfile::tempdir().unwrap();
    let data = separated(dir.path());
    let model = fit(dir.path(), &data);
    ModelDocument::load(&model).unwrap().into_model().unwrap();
    let out = stdout(&woe(&["classify", "--model", &model, "--data", &data, "--format", "doc"]));
    let rows: Vec<serde_json::Value> = serde_json::from_str(&out).unwrap();
    assert_eq!(rows.len(), 180);
    for r in &rows {
        assert_eq!(r["label"]["id"], r["true_label"], "{r}");
        assert_eq!(r["posterior"].as_array().unwrap().len(), 3);
        assert_eq!(r["total_woe"].as_array().unwrap().len(), 3);
    }
    let one = stdout(&woe(&["classify", "--model", &model, "--values", "6,0,0"]));
    assert!(one.starts_with("class_1\n"), "{one}");
}

#[test]
fn fit_doc_mode_is_a_model_document() {
    let dir = tempfile::tempdir().unwrap();
    let data = separated(dir.path());
    let out = stdout(&woe(&["fit", "--data", &data, "--format", "doc", "--gamma", "1,0.5,2"]));
    let doc = ModelDocument::from_json(&out).unwrap();
    assert_eq!(doc.gamma_defaults, Some(vec![1.0, 0.5, 2.0]));
    let human = stdout(&woe(&["fit", "--data", &data, "--holdout", "0.25", "--seed", "2", "--balance", "random"]));
    assert!(human.contains("holdout accuracy 1.0000"), "{human}");
}

#[test]
fn explain_conditions() {
    let dir = tempfile::tempdir().unwrap();
    let data = separated(dir.path());
    let model = fit(dir.path(), &data);
    let c3 = stdout(&woe(&["explain", "--model", &model, "--data", &data, "--row", "4", "--condition", "C3", "--format", "doc"]));
    let v: serde_json::Value = serde_json::from_str(&c3).unwrap();
    assert_eq!(v["condition"], "C3");
    assert_eq!(v["reports"].as_array().unwrap().len(), 3);
    let human = stdout(&woe(&["explain", "--model", &model, "--values", "6,0,0", "--condition", "C3"]));
    assert_eq!(human.lines().filter(|l| l.starts_with("hypothesis ")).count(), 3);
    assert!(human.contains("+++") && human.contains("---"), "{human}");

    let c2 = stdout(&woe(&["explain", "--model", &model, "--values", "6,0,0", "--condition", "C2", "--format", "doc"]));
    assert!(!c2.contains("class_"), "{c2}");
    let c1 = stdout(&woe(&["explain", "--model", &model, "--values", "6,0,0", "--condition", "c1"]));
    assert!(c1.contains("prediction: class_1"));
}

#[test]
fn select_instances_respects_thresholds() {
    let dir = tempfile::tempdir().unwrap();
    let pool = overlapping(dir.path());
    let model = fit(dir.path(), &pool);
    let pool_out = dir.path().join("tasks.json");
    let out = stdout(&woe(&[
        "select-instances", "--model", &model, "--data", &pool, "--low", "0.3", "--high", "0.7",
        "--per-category", "4", "--format", "doc", "--pool-out", pool_out.to_str().unwrap(),
    ]));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let cats = v["categories"].as_object().unwrap();
    assert_eq!(cats.len(), 4);
    for (name, entries) in cats {
        for e in entries.as_array().unwrap() {
            let h = e["entropy"].as_f64().unwrap();
            if name.contains("high") {
                assert!(h > 0.7, "{name} {h}");
            } else {
                assert!(h < 0.3, "{name} {h}");
            }
        }
    }
    let tasks = TaskPool::load(&pool_out).unwrap();
    assert_eq!(tasks.len(), 16);
}

#[test]
fn identical_inputs_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let pool = overlapping(dir.path());
    let a = woe(&["fit", "--data", &pool, "--format", "doc"]).stdout;
    let b = woe(&["fit", "--data", &pool, "--format", "doc"]).stdout;
    assert_eq!(a, b);
    let model = fit(dir.path(), &pool);
    let args = ["select-instances", "--model", &model, "--data", &pool];
    assert_eq!(woe(&args).stdout, woe(&args).stdout);
}

#[test]
fn concepts_pathway() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("concepts.txt");
    let mut f = std::fs::File::create(&path).unwrap();
    write_concepts(&dermoscopy_concepts(40, 3), &mut f).unwrap();
    let concepts = path.display().to_string();
    let model = dir.path().join("m.json").display().to_string();
    stdout(&woe(&["fit", "--concepts", &concepts, "--out", &model]));
    let doc = ModelDocument::load(&model).unwrap();
    assert_eq!(doc.feature_names.len(), 12);
    assert_eq!(doc.classes.len(), 7);
    let v: serde_json::Value = serde_json::from_str(&stdout(&woe(&[
        "explain", "--model", &model, "--concepts", &concepts, "--row", "0", "--format", "doc",
    ])))
    .unwrap();
    assert_eq!(v["reports"].as_array().unwrap().len(), 7);
}

#[test]
fn exit_codes() {
    assert_eq!(woe(&["fit", "--bogus"]).status.code(), Some(1));
    assert_eq!(woe(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(woe(&["explain", "--model", "m.json", "--condition", "C9", "--values", "1"]).status.code(), Some(1));
    assert_eq!(woe(&["--help"]).status.code(), Some(0));
    assert_eq!(woe(&["fit", "--data", "/definitely/missing.csv"]).status.code(), Some(2));
    assert_eq!(woe(&["fit"]).status.code(), Some(1));

    let dir = tempfile::tempdir().unwrap();
    let data = separated(dir.path());
    let model = fit(dir.path(), &data);
    let wrong_dim = woe(&["classify", "--model", &model, "--values", "1,2"]);
    assert_eq!(wrong_dim.status.code(), Some(2));
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"format\": \"woe-model\", \"format_version\": 7}").unwrap();
    let out = woe(&["classify", "--model", bad.to_str().unwrap(), "--values", "1,2,3"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("version"));
}

#[test]
fn export_and_evaluate_from_a_session_log() {
    let dir = tempfile::tempdir().unwrap();
    let logs = dir.path().join("logs");
    let spec = MixtureSpec::random(3, 3, 1.0, 8);
    let model = woe_core::GaussianEvidenceModel::fit(&spec.sample(600, 1).unwrap(), woe_core::Assumption::Dependent, 1e-6).unwrap();
    let config = ServiceConfig {
        model,
        scale: Default::default(),
        gamma: None,
        tasks: TaskPool::from_table(&spec.sample(6, 2).unwrap(), None).unwrap(),
        policy: ConditionPolicy::Fixed { condition: woe_core::Condition::C1 },
        seed: 3,
        log_dir: Some(logs.clone()),
    };
    let clock = std::sync::Arc::new(ManualClock::new(0.0));
    let svc = StudyService::new(config, clock.clone()).unwrap();
    let s = svc.create_session(CreateSession::default()).unwrap();
    for n in 0..4 {
        svc.get_task(&s.id, n).unwrap();
        clock.advance(2.0);
        svc.submit_decision(&s.id, SubmitDecision { task: n, label: n % 3, confidence: Some(0.6), allocation: None, client_duration_secs: None }).unwrap();
    }
    let live = svc.export(&s.id).unwrap();

    let out = stdout(&woe(&["export", "--log-dir", logs.to_str().unwrap(), "--session", &s.id]));
    assert_eq!(ExportDocument::from_json(&out).unwrap(), live);
    let file = dir.path().join("export.json");
    std::fs::write(&file, &out).unwrap();

    let table = stdout(&woe(&["evaluate", file.to_str().unwrap()]));
    let line = table.lines().nth(1).unwrap();
    let brier = live.summary.participant.as_ref().unwrap().brier;
    assert!(line.contains(&format!("{brier:.4}")), "{table}");
    assert!(line.contains("2.0000"));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&woe(&["evaluate", file.to_str().unwrap(), "--format", "doc"]))).unwrap();
    assert_eq!(doc[0]["participant"]["brier"].as_f64().unwrap(), brier);

    let mut tampered: serde_json::Value = serde_json::from_str(&out).unwrap();
    tampered["decisions"][0]["confidence"] = serde_json::json!(0.1);
    std::fs::write(&file, tampered.to_string()).unwrap();
    assert_eq!(woe(&["evaluate", file.to_str().unwrap()]).status.code(), Some(2));
}
