use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use woe_core::metrics::{self, MetricError, ModelTrace, ParticipantSummary, StudyResponse};
use woe_core::Condition;

use crate::session::{
    BipolarRating, ConditionViolation, DecisionRecord, EventKind, InteractionEvent, SessionInfo, SessionState,
};

pub const EXPORT_FORMAT: &str = "woe-session-export";
pub const EXPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportSummary {
    pub decisions: usize,
    /// `None` until at least one decision exists.
    pub participant: Option<ParticipantSummary>,
    /// Mean over decided C3 tasks of distinct queried hypotheses / K.
    pub selected_hypotheses_pct: Option<f64>,
}

/// A full session log in one document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportDocument {
    pub format: String,
    pub format_version: u32,
    pub session: SessionInfo,
    pub task_started: BTreeMap<usize, f64>,
    pub decisions: Vec<DecisionRecord>,
    pub events: Vec<InteractionEvent>,
    pub ratings: Vec<BipolarRating>,
    pub violations: Vec<ConditionViolation>,
    pub summary: ExportSummary,
}

impl ExportDocument {
    pub fn from_state(state: &SessionState) -> Result<Self, MetricError> {
        let mut doc = Self {
            format: EXPORT_FORMAT.into(),
            format_version: EXPORT_VERSION,
            session: state.info.clone(),
            task_started: state.started.clone(),
            decisions: state.decisions.clone(),
            events: state.events.clone(),
            ratings: state.ratings.clone(),
            violations: state.violations.clone(),
            summary: ExportSummary {
                decisions: 0,
                participant: None,
                selected_hypotheses_pct: None,
            },
        };
        doc.summary = doc.recompute_summary()?;
        Ok(doc)
    }

    pub fn responses(&self) -> Result<Vec<StudyResponse>, MetricError> {
        self.decisions
            .iter()
            .map(|d| StudyResponse::new(d.confidence, d.correct, d.label, d.duration_secs))
            .collect()
    }

    pub fn traces(&self) -> Vec<ModelTrace> {
        self.decisions
            .iter()
            .map(|d| ModelTrace::new(d.model_label, d.true_label))
            .collect()
    }

    /// Distinct hypotheses queried on each task, from the event log.
    pub fn queried_hypotheses(&self) -> BTreeMap<usize, BTreeSet<usize>> {
        let mut out: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
        for e in &self.events {
            if let (EventKind::HypothesisSelected, Some(l)) = (e.kind, e.label) {
                out.entry(e.task).or_default().insert(l);
            }
        }
        out
    }

    pub fn selected_hypotheses_pct(&self) -> Result<Option<f64>, MetricError> {
        let queried = self.queried_hypotheses();
        let k = self.session.labels.len();
        let empty = BTreeSet::new();
        let per_task: Vec<f64> = self
            .decisions
            .iter()
            .filter(|d| d.condition == Condition::C3)
            .map(|d| metrics::selected_hypotheses_pct(queried.get(&d.task).unwrap_or(&empty), k))
            .collect::<Result<_, _>>()?;
        Ok((!per_task.is_empty()).then(|| per_task.iter().sum::<f64>() / per_task.len() as f64))
    }

    /// Aggregate the measures again from the raw records.
    pub fn recompute_summary(&self) -> Result<ExportSummary, MetricError> {
        let responses = self.responses()?;
        let participant = if responses.is_empty() {
            None
        } else {
            Some(metrics::summarize(&responses, &self.traces())?)
        };
        Ok(ExportSummary {
            decisions: self.decisions.len(),
            participant,
            selected_hypotheses_pct: self.selected_hypotheses_pct()?,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("exports always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        let doc: Self = serde_json::from_str(text).map_err(|e| e.to_string())?;
        if doc.format != EXPORT_FORMAT {
            return Err(format!("not a {EXPORT_FORMAT} document"));
        }
        if doc.format_version != EXPORT_VERSION {
            return Err(format!("unsupported export version {}", doc.format_version));
        }
        Ok(doc)
    }
}
