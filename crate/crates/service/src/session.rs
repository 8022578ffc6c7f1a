//! Session records and the append-only log they are rebuilt from.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use woe_core::{Condition, Label};

use crate::policy::ConditionPolicy;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionInfo {
    pub id: String,
    pub policy: ConditionPolicy,
    pub seed: u64,
    pub created_at: f64,
    /// Task ids in delivery order.
    pub task_order: Vec<String>,
    /// Condition of each position in `task_order`.
    pub conditions: Vec<Condition>,
    pub labels: Vec<Label>,
    pub feature_names: Vec<String>,
}

impl SessionInfo {
    pub fn num_tasks(&self) -> usize {
        self.task_order.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub session_id: String,
    /// Position in the session's task order.
    pub task: usize,
    pub task_id: String,
    pub condition: Condition,
    pub label: usize,
    /// In `[0, 1]`; derived from the allocation when one was given.
    pub confidence: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub allocation: Option<Vec<f64>>,
    pub model_label: usize,
    pub true_label: usize,
    pub correct: bool,
    /// Server-side, from first fetch of the task to submission.
    pub duration_secs: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub client_duration_secs: Option<f64>,
    pub timestamp: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    HypothesisSelected,
    HypothesisDeselected,
    EvidenceViewed,
    RecommendationViewed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionEvent {
    pub session_id: String,
    pub task: usize,
    pub task_id: String,
    pub kind: EventKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<usize>,
    pub timestamp: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RatingMetric {
    InControl,
    DecisionMaking,
    EaseOfUse,
    ErrorDetection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BipolarRating {
    pub session_id: String,
    pub metric: RatingMetric,
    /// In `[-5, 5]`.
    pub value: i8,
    pub timestamp: f64,
}

/// A rejected request for evidence the task's condition does not allow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionViolation {
    pub session_id: String,
    pub task: usize,
    pub condition: Condition,
    pub request: String,
    pub timestamp: f64,
}

/// One line of a session log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "entry", rename_all = "kebab-case")]
pub enum LogEntry {
    Created(SessionInfo),
    TaskStarted { task: usize, at: f64 },
    Decision(DecisionRecord),
    Event(InteractionEvent),
    Rating(BipolarRating),
    Violation(ConditionViolation),
}

impl LogEntry {
    fn timestamp(&self) -> f64 {
        match self {
            Self::Created(i) => i.created_at,
            Self::TaskStarted { at, .. } => *at,
            Self::Decision(d) => d.timestamp,
            Self::Event(e) => e.timestamp,
            Self::Rating(r) => r.timestamp,
            Self::Violation(v) => v.timestamp,
        }
    }
}

/// Everything known about a session; the fold of its log.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionState {
    pub info: SessionInfo,
    pub started: BTreeMap<usize, f64>,
    pub decisions: Vec<DecisionRecord>,
    pub events: Vec<InteractionEvent>,
    pub ratings: Vec<BipolarRating>,
    pub violations: Vec<ConditionViolation>,
    last_timestamp: f64,
}

impl SessionState {
    pub fn new(info: SessionInfo) -> Self {
        let last_timestamp = info.created_at;
        Self {
            info,
            started: BTreeMap::new(),
            decisions: Vec::new(),
            events: Vec::new(),
            ratings: Vec::new(),
            violations: Vec::new(),
            last_timestamp,
        }
    }

    /// Rebuild a session from its log lines.
    pub fn replay(entries: impl IntoIterator<Item = LogEntry>) -> Result<Self, String> {
        let mut entries = entries.into_iter();
        let Some(LogEntry::Created(info)) = entries.next() else {
            return Err("session log must start with a created entry".into());
        };
        let mut state = Self::new(info);
        for entry in entries {
            if matches!(entry, LogEntry::Created(_)) {
                return Err("session log has a second created entry".into());
            }
            if entry.timestamp() < state.last_timestamp {
                return Err("session log timestamps go backwards".into());
            }
            state.apply(entry);
        }
        Ok(state)
    }

    /// Clamp a clock reading so timestamps never decrease within the session.
    pub fn stamp(&self, now: f64) -> f64 {
        now.max(self.last_timestamp)
    }

    pub fn apply(&mut self, entry: LogEntry) {
        self.last_timestamp = self.last_timestamp.max(entry.timestamp());
        match entry {
            LogEntry::Created(_) => {}
            LogEntry::TaskStarted { task, at } => {
                self.started.entry(task).or_insert(at);
            }
            LogEntry::Decision(d) => self.decisions.push(d),
            LogEntry::Event(e) => self.events.push(e),
            LogEntry::Rating(r) => self.ratings.push(r),
            LogEntry::Violation(v) => self.violations.push(v),
        }
    }

    pub fn decision(&self, task: usize) -> Option<&DecisionRecord> {
        self.decisions.iter().find(|d| d.task == task)
    }

    /// Hypotheses currently selected on a task, replaying select/deselect events.
    pub fn selected(&self, task: usize) -> BTreeSet<usize> {
        let mut set = BTreeSet::new();
        for e in self.events.iter().filter(|e| e.task == task) {
            match (e.kind, e.label) {
                (EventKind::HypothesisSelected, Some(l)) => {
                    set.insert(l);
                }
                (EventKind::HypothesisDeselected, Some(l)) => {
                    set.remove(&l);
                }
                _ => {}
            }
        }
        set
    }
}
