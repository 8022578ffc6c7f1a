//! The pool of study instances a session draws its tasks from.

use std::path::Path;

use serde::{Deserialize, Serialize};
use woe_core::dataset::{ConceptActivationTable, LabeledTable};
use woe_core::GaussianEvidenceModel;

use crate::ServiceError;

pub const TASK_POOL_FORMAT: &str = "woe-task-pool";
pub const TASK_POOL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Task {
    pub id: String,
    pub features: Vec<f64>,
    pub true_label: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskPool {
    pub format: String,
    pub format_version: u32,
    pub feature_names: Vec<String>,
    pub label_names: Vec<String>,
    pub tasks: Vec<Task>,
}

impl TaskPool {
    pub fn new(feature_names: Vec<String>, label_names: Vec<String>, tasks: Vec<Task>) -> Result<Self, ServiceError> {
        let pool = Self {
            format: TASK_POOL_FORMAT.into(),
            format_version: TASK_POOL_VERSION,
            feature_names,
            label_names,
            tasks,
        };
        pool.validate()?;
        Ok(pool)
    }

    /// Every row becomes a task, ids `task-<row>` unless given.
    pub fn from_table(table: &LabeledTable, ids: Option<Vec<String>>) -> Result<Self, ServiceError> {
        let ids = ids.unwrap_or_else(|| (0..table.len()).map(|i| format!("task-{i}")).collect());
        if ids.len() != table.len() {
            return Err(ServiceError::BadRequest(format!(
                "{} task ids for {} rows",
                ids.len(),
                table.len()
            )));
        }
        let tasks = ids
            .into_iter()
            .zip(table.rows().iter().zip(table.labels()))
            .map(|(id, (row, &true_label))| Task {
                id,
                features: row.clone(),
                true_label,
            })
            .collect();
        Self::new(table.feature_names().to_vec(), table.label_names().to_vec(), tasks)
    }

    pub fn from_concepts(table: &ConceptActivationTable) -> Result<Self, ServiceError> {
        Self::from_table(&table.to_table(), Some(table.instance_ids().to_vec()))
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    fn validate(&self) -> Result<(), ServiceError> {
        if self.format != TASK_POOL_FORMAT {
            return Err(ServiceError::BadRequest(format!("not a {TASK_POOL_FORMAT} document")));
        }
        if self.format_version != TASK_POOL_VERSION {
            return Err(ServiceError::BadRequest(format!(
                "unsupported task pool version {}",
                self.format_version
            )));
        }
        let d = self.feature_names.len();
        let mut seen = std::collections::HashSet::new();
        for t in &self.tasks {
            if !seen.insert(t.id.as_str()) {
                return Err(ServiceError::BadRequest(format!("duplicate task id '{}'", t.id)));
            }
            if t.features.len() != d || t.features.iter().any(|v| !v.is_finite()) {
                return Err(ServiceError::BadRequest(format!(
                    "task '{}' needs {d} finite feature values",
                    t.id
                )));
            }
            if t.true_label >= self.label_names.len() {
                return Err(ServiceError::BadRequest(format!(
                    "task '{}' has label {} outside {} classes",
                    t.id,
                    t.true_label,
                    self.label_names.len()
                )));
            }
        }
        Ok(())
    }

    /// The pool must describe the same features and classes as the model.
    pub fn check_model(&self, model: &GaussianEvidenceModel) -> Result<(), ServiceError> {
        if self.feature_names != model.feature_names() {
            return Err(ServiceError::BadRequest("task pool features differ from the model's".into()));
        }
        let names: Vec<&str> = model.labels().iter().map(|l| l.name.as_str()).collect();
        if self.label_names.iter().map(String::as_str).ne(names) {
            return Err(ServiceError::BadRequest("task pool labels differ from the model's".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("task pools always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, ServiceError> {
        let pool: Self = serde_json::from_str(text).map_err(|e| ServiceError::BadRequest(e.to_string()))?;
        pool.validate()?;
        Ok(pool)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ServiceError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| ServiceError::Log(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}
