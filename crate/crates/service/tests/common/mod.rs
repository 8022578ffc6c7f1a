#![allow(dead_code)]

use std::sync::Arc;

use woe_core::synthetic::MixtureSpec;
use woe_core::{Assumption, GaussianEvidenceModel, SignificanceScale};
use woe_service::{ConditionPolicy, ManualClock, ServiceConfig, StudyService, TaskPool};

pub fn model_and_pool(tasks: usize) -> (GaussianEvidenceModel, TaskPool) {
    let spec = MixtureSpec::random(3, 4, 1.5, 77);
    let model = GaussianEvidenceModel::fit(&spec.sample(900, 1).unwrap(), Assumption::Dependent, 1e-6).unwrap();
    let pool = TaskPool::from_table(&spec.sample(tasks, 2).unwrap(), None).unwrap();
    (model, pool)
}

pub fn service(policy: ConditionPolicy, tasks: usize) -> (StudyService, Arc<ManualClock>) {
    let (model, pool) = model_and_pool(tasks);
    let clock = Arc::new(ManualClock::new(1000.0));
    let config = ServiceConfig {
        model,
        scale: SignificanceScale::default(),
        gamma: None,
        tasks: pool,
        policy,
        seed: 5,
        log_dir: None,
    };
    (StudyService::new(config, clock.clone()).unwrap(), clock)
}

/// Every string (key or value) in a JSON document.
pub fn strings(value: &serde_json::Value, out: &mut Vec<String>) {
    match value {
        serde_json::Value::String(s) => out.push(s.clone()),
        serde_json::Value::Array(a) => a.iter().for_each(|v| strings(v, out)),
        serde_json::Value::Object(m) => {
            for (k, v) in m {
                out.push(k.clone());
                strings(v, out);
            }
        }
        _ => {}
    }
}

/// No label name and no label-bearing key anywhere in the payload.
pub fn label_free(payload: &serde_json::Value, label_names: &[String]) -> bool {
    let mut all = Vec::new();
    strings(payload, &mut all);
    all.iter().all(|s| {
        !label_names.iter().any(|l| s.contains(l.as_str())) && s != "prediction" && s != "hypothesis"
    })
}
