//! The study harness proper, independent of HTTP.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use woe_core::evidence::{condition_view, report, HypothesisReport, RedactedReport};
use woe_core::metrics::confidence_from_allocation;
use woe_core::{Condition, ConditionView, GaussianEvidenceModel, Label, SignificanceScale};

use crate::clock::Clock;
use crate::export::ExportDocument;
use crate::policy::ConditionPolicy;
use crate::session::{
    BipolarRating, ConditionViolation, DecisionRecord, EventKind, InteractionEvent, LogEntry, RatingMetric,
    SessionInfo, SessionState,
};
use crate::tasks::TaskPool;
use crate::ServiceError;

pub struct ServiceConfig {
    pub model: GaussianEvidenceModel,
    pub scale: SignificanceScale,
    pub gamma: Option<Vec<f64>>,
    pub tasks: TaskPool,
    pub policy: ConditionPolicy,
    /// Seeds session ids and any session seed the client leaves out.
    pub seed: u64,
    /// One append-only `<session>.jsonl` per session when set.
    pub log_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    #[serde(default)]
    pub policy: Option<ConditionPolicy>,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureValue {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "condition")]
pub enum TaskView {
    C1 { prediction: Label, report: HypothesisReport },
    C2 { report: RedactedReport },
    /// Reports for the hypotheses selected so far; empty on first fetch.
    C3 { evidence: Vec<HypothesisReport> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskPayload {
    pub session_id: String,
    pub task: usize,
    pub task_id: String,
    pub total_tasks: usize,
    pub features: Vec<FeatureValue>,
    pub submitted: bool,
    #[serde(flatten)]
    pub view: TaskView,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubmitDecision {
    pub task: usize,
    pub label: usize,
    #[serde(default)]
    pub confidence: Option<f64>,
    #[serde(default)]
    pub allocation: Option<Vec<f64>>,
    #[serde(default)]
    pub client_duration_secs: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PostEvent {
    pub task: usize,
    pub kind: EventKind,
    #[serde(default)]
    pub label: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubmitRating {
    pub metric: RatingMetric,
    pub value: i64,
}

struct Handle {
    state: SessionState,
    order: Vec<usize>,
    log: Option<File>,
}

pub struct StudyService {
    model: GaussianEvidenceModel,
    scale: SignificanceScale,
    gamma: Option<Vec<f64>>,
    tasks: TaskPool,
    predictions: Vec<usize>,
    policy: ConditionPolicy,
    log_dir: Option<PathBuf>,
    clock: Arc<dyn Clock>,
    rng: Mutex<ChaCha8Rng>,
    sessions: RwLock<HashMap<String, Arc<Mutex<Handle>>>>,
}

impl StudyService {
    /// Validates the configuration and reloads any session logs in `log_dir`.
    pub fn new(config: ServiceConfig, clock: Arc<dyn Clock>) -> Result<Self, ServiceError> {
        config.tasks.check_model(&config.model)?;
        if let Some(g) = &config.gamma {
            config
                .model
                .check_gamma(g)
                .map_err(|e| ServiceError::BadRequest(e.to_string()))?;
        }
        config.policy.validate().map_err(ServiceError::BadRequest)?;
        let predictions = config
            .tasks
            .tasks
            .iter()
            .map(|t| config.model.classify(&t.features))
            .collect::<Result<_, _>>()
            .map_err(|e| ServiceError::Internal(e.to_string()))?;
        let service = Self {
            model: config.model,
            scale: config.scale,
            gamma: config.gamma,
            tasks: config.tasks,
            predictions,
            policy: config.policy,
            log_dir: config.log_dir,
            clock,
            rng: Mutex::new(ChaCha8Rng::seed_from_u64(config.seed)),
            sessions: RwLock::new(HashMap::new()),
        };
        service.reload_logs()?;
        Ok(service)
    }

    pub fn model(&self) -> &GaussianEvidenceModel {
        &self.model
    }

    pub fn scale(&self) -> &SignificanceScale {
        &self.scale
    }

    pub fn gamma(&self) -> Option<&[f64]> {
        self.gamma.as_deref()
    }

    pub fn tasks(&self) -> &TaskPool {
        &self.tasks
    }

    pub fn session_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.sessions.read().unwrap().keys().cloned().collect();
        ids.sort();
        ids
    }

    fn reload_logs(&self) -> Result<(), ServiceError> {
        let Some(dir) = &self.log_dir else { return Ok(()) };
        std::fs::create_dir_all(dir).map_err(|e| ServiceError::Log(format!("{}: {e}", dir.display())))?;
        let entries = std::fs::read_dir(dir).map_err(|e| ServiceError::Log(format!("{}: {e}", dir.display())))?;
        let mut paths: Vec<PathBuf> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .collect();
        paths.sort();
        for path in paths {
            let state = read_session_log(&path)?;
            let order = self.resolve_order(&state.info)?;
            let log = open_log(&path)?;
            let id = state.info.id.clone();
            self.sessions
                .write()
                .unwrap()
                .insert(id, Arc::new(Mutex::new(Handle { state, order, log: Some(log) })));
        }
        Ok(())
    }

    fn resolve_order(&self, info: &SessionInfo) -> Result<Vec<usize>, ServiceError> {
        let index: HashMap<&str, usize> = self
            .tasks
            .tasks
            .iter()
            .enumerate()
            .map(|(i, t)| (t.id.as_str(), i))
            .collect();
        info.task_order
            .iter()
            .map(|id| {
                index.get(id.as_str()).copied().ok_or_else(|| {
                    ServiceError::Log(format!("session {} refers to unknown task '{id}'", info.id))
                })
            })
            .collect()
    }

    pub fn create_session(&self, request: CreateSession) -> Result<SessionInfo, ServiceError> {
        if self.tasks.is_empty() {
            return Err(ServiceError::NoTasks);
        }
        let policy = request.policy.unwrap_or_else(|| self.policy.clone());
        policy.validate().map_err(ServiceError::Validation)?;
        let (id, seed) = {
            let mut rng = self.rng.lock().unwrap();
            let sessions = self.sessions.read().unwrap();
            let id = loop {
                let id = format!("{:016x}", rng.random::<u64>());
                if !sessions.contains_key(&id) {
                    break id;
                }
            };
            (id, request.seed.unwrap_or_else(|| rng.random()))
        };

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut order: Vec<usize> = (0..self.tasks.len()).collect();
        order.shuffle(&mut rng);
        let conditions = policy.assign(order.len(), &mut rng);
        let info = SessionInfo {
            id: id.clone(),
            policy,
            seed,
            created_at: self.clock.now(),
            task_order: order.iter().map(|&i| self.tasks.tasks[i].id.clone()).collect(),
            conditions,
            labels: self.model.labels().to_vec(),
            feature_names: self.model.feature_names().to_vec(),
        };

        let log = match &self.log_dir {
            Some(dir) => Some(open_log(&dir.join(format!("{id}.jsonl")))?),
            None => None,
        };
        let mut handle = Handle {
            state: SessionState::new(info.clone()),
            order,
            log,
        };
        write_entry(&mut handle, &LogEntry::Created(info.clone()))?;
        self.sessions
            .write()
            .unwrap()
            .insert(id, Arc::new(Mutex::new(handle)));
        Ok(info)
    }

    fn handle(&self, id: &str) -> Result<Arc<Mutex<Handle>>, ServiceError> {
        self.sessions
            .read()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::UnknownSession(id.to_string()))
    }

    pub fn session(&self, id: &str) -> Result<SessionInfo, ServiceError> {
        Ok(self.handle(id)?.lock().unwrap().state.info.clone())
    }

    fn check_task(handle: &Handle, task: usize) -> Result<(), ServiceError> {
        if task >= handle.order.len() {
            return Err(ServiceError::TaskOutOfRange {
                index: task,
                len: handle.order.len(),
            });
        }
        Ok(())
    }

    fn hypothesis_report(&self, pool_index: usize, h: usize) -> Result<HypothesisReport, ServiceError> {
        report(
            &self.model,
            &self.tasks.tasks[pool_index].features,
            h,
            self.gamma.as_deref(),
            &self.scale,
        )
        .map_err(|e| ServiceError::Internal(e.to_string()))
    }

    pub fn get_task(&self, id: &str, task: usize) -> Result<TaskPayload, ServiceError> {
        let handle = self.handle(id)?;
        let mut handle = handle.lock().unwrap();
        Self::check_task(&handle, task)?;
        if !handle.state.started.contains_key(&task) {
            let at = handle.state.stamp(self.clock.now());
            commit(&mut handle, LogEntry::TaskStarted { task, at })?;
        }
        let pool_index = handle.order[task];
        let source = &self.tasks.tasks[pool_index];
        let condition = handle.state.info.conditions[task];
        let view = match condition {
            Condition::C3 => TaskView::C3 {
                evidence: handle
                    .state
                    .selected(task)
                    .into_iter()
                    .map(|h| self.hypothesis_report(pool_index, h))
                    .collect::<Result<_, _>>()?,
            },
            c => match condition_view(&self.model, &source.features, c, self.gamma.as_deref(), &self.scale)
                .map_err(|e| ServiceError::Internal(e.to_string()))?
            {
                ConditionView::RecommendationDriven { prediction, report } => TaskView::C1 { prediction, report },
                ConditionView::ExplanationOnly { report } => TaskView::C2 { report },
                ConditionView::HypothesisDriven { .. } => unreachable!("C3 handled above"),
            },
        };
        Ok(TaskPayload {
            session_id: id.to_string(),
            task,
            task_id: source.id.clone(),
            total_tasks: handle.order.len(),
            features: self
                .model
                .feature_names()
                .iter()
                .zip(&source.features)
                .map(|(name, &value)| FeatureValue {
                    name: name.clone(),
                    value,
                })
                .collect(),
            submitted: handle.state.decision(task).is_some(),
            view,
        })
    }

    fn parse_hypothesis(&self, hypothesis: &str) -> Result<usize, ServiceError> {
        let unknown = || ServiceError::UnknownHypothesis(hypothesis.to_string());
        match hypothesis.parse::<usize>() {
            Ok(h) if h < self.model.num_classes() => Ok(h),
            Ok(_) => Err(unknown()),
            Err(_) => self
                .model
                .labels()
                .iter()
                .position(|l| l.name == hypothesis)
                .ok_or_else(unknown),
        }
    }

    fn reject(&self, handle: &mut Handle, task: usize, request: String) -> ServiceError {
        let condition = handle.state.info.conditions[task];
        let violation = ConditionViolation {
            session_id: handle.state.info.id.clone(),
            task,
            condition,
            request: request.clone(),
            timestamp: handle.state.stamp(self.clock.now()),
        };
        tracing::warn!(session = %violation.session_id, task, %condition, %request, "condition violation rejected");
        if let Err(e) = commit(handle, LogEntry::Violation(violation)) {
            return e;
        }
        ServiceError::ConditionViolation { condition, request }
    }

    /// Per-hypothesis evidence, C3 tasks only. The first query of a
    /// hypothesis (or the first after deselecting it) logs a selection,
    /// later ones log a view.
    pub fn get_evidence(&self, id: &str, task: usize, hypothesis: &str) -> Result<HypothesisReport, ServiceError> {
        let handle = self.handle(id)?;
        let mut handle = handle.lock().unwrap();
        Self::check_task(&handle, task)?;
        if handle.state.info.conditions[task] != Condition::C3 {
            return Err(self.reject(&mut handle, task, format!("evidence for hypothesis '{hypothesis}'")));
        }
        let h = self.parse_hypothesis(hypothesis)?;
        let report = self.hypothesis_report(handle.order[task], h)?;
        let kind = if handle.state.selected(task).contains(&h) {
            EventKind::EvidenceViewed
        } else {
            EventKind::HypothesisSelected
        };
        let event = self.event(&handle, task, kind, Some(h));
        commit(&mut handle, LogEntry::Event(event))?;
        Ok(report)
    }

    fn event(&self, handle: &Handle, task: usize, kind: EventKind, label: Option<usize>) -> InteractionEvent {
        InteractionEvent {
            session_id: handle.state.info.id.clone(),
            task,
            task_id: self.tasks.tasks[handle.order[task]].id.clone(),
            kind,
            label,
            timestamp: handle.state.stamp(self.clock.now()),
        }
    }

    /// Client-reported interactions. Selections are logged by the evidence
    /// endpoint and cannot be posted directly.
    pub fn post_event(&self, id: &str, request: PostEvent) -> Result<InteractionEvent, ServiceError> {
        let handle = self.handle(id)?;
        let mut handle = handle.lock().unwrap();
        let task = request.task;
        Self::check_task(&handle, task)?;
        let condition = handle.state.info.conditions[task];
        if let Some(l) = request.label {
            if l >= self.model.num_classes() {
                return Err(ServiceError::UnknownHypothesis(l.to_string()));
            }
        }
        match request.kind {
            EventKind::HypothesisSelected => {
                return Err(ServiceError::BadRequest(
                    "hypothesis selections are recorded by the evidence endpoint".into(),
                ))
            }
            EventKind::HypothesisDeselected => {
                if condition != Condition::C3 {
                    return Err(self.reject(&mut handle, task, "hypothesis deselection".into()));
                }
                let label = request
                    .label
                    .ok_or_else(|| ServiceError::Validation("deselection needs a label".into()))?;
                if !handle.state.selected(task).contains(&label) {
                    return Err(ServiceError::Conflict(format!("hypothesis {label} is not selected")));
                }
            }
            EventKind::RecommendationViewed => {
                if condition != Condition::C1 {
                    return Err(self.reject(&mut handle, task, "recommendation view".into()));
                }
            }
            EventKind::EvidenceViewed => {
                let predicted = self.predictions[handle.order[task]];
                match (condition, request.label) {
                    (Condition::C3, Some(l)) if !handle.state.selected(task).contains(&l) => {
                        return Err(ServiceError::Conflict(format!("hypothesis {l} is not selected")));
                    }
                    (Condition::C1, Some(l)) if l != predicted => {
                        return Err(self.reject(&mut handle, task, format!("evidence view for hypothesis {l}")));
                    }
                    // A C2 client has no label to report; naming one is a probe.
                    (Condition::C2, Some(l)) => {
                        return Err(self.reject(&mut handle, task, format!("evidence view for hypothesis {l}")));
                    }
                    _ => {}
                }
            }
        }
        let event = self.event(&handle, task, request.kind, request.label);
        commit(&mut handle, LogEntry::Event(event.clone()))?;
        Ok(event)
    }

    pub fn submit_decision(&self, id: &str, request: SubmitDecision) -> Result<DecisionRecord, ServiceError> {
        let handle = self.handle(id)?;
        let mut handle = handle.lock().unwrap();
        let task = request.task;
        Self::check_task(&handle, task)?;
        let k = self.model.num_classes();
        if request.label >= k {
            return Err(ServiceError::Validation(format!(
                "label {} outside {k} classes",
                request.label
            )));
        }
        let confidence = match (&request.confidence, &request.allocation) {
            (Some(c), None) => {
                if !(0.0..=1.0).contains(c) {
                    return Err(ServiceError::Validation(format!("confidence {c} outside [0, 1]")));
                }
                *c
            }
            (None, Some(a)) => {
                if a.len() != k {
                    return Err(ServiceError::Validation(format!(
                        "allocation has {} entries for {k} classes",
                        a.len()
                    )));
                }
                confidence_from_allocation(a, request.label).map_err(|e| ServiceError::Validation(e.to_string()))?
            }
            _ => {
                return Err(ServiceError::Validation(
                    "give exactly one of confidence or allocation".into(),
                ))
            }
        };
        if let Some(c) = request.client_duration_secs {
            if !(c.is_finite() && c >= 0.0) {
                return Err(ServiceError::Validation(format!("client duration {c} must be >= 0")));
            }
        }
        if handle.state.decision(task).is_some() {
            return Err(ServiceError::Conflict(format!("task {task} already has a decision")));
        }
        let Some(&started) = handle.state.started.get(&task) else {
            return Err(ServiceError::Conflict(format!("task {task} has not been fetched")));
        };
        let timestamp = handle.state.stamp(self.clock.now());
        let pool_index = handle.order[task];
        let source = &self.tasks.tasks[pool_index];
        let record = DecisionRecord {
            session_id: id.to_string(),
            task,
            task_id: source.id.clone(),
            condition: handle.state.info.conditions[task],
            label: request.label,
            confidence,
            allocation: request.allocation,
            model_label: self.predictions[pool_index],
            true_label: source.true_label,
            correct: request.label == source.true_label,
            duration_secs: timestamp - started,
            client_duration_secs: request.client_duration_secs,
            timestamp,
        };
        commit(&mut handle, LogEntry::Decision(record.clone()))?;
        Ok(record)
    }

    pub fn submit_rating(&self, id: &str, request: SubmitRating) -> Result<BipolarRating, ServiceError> {
        let handle = self.handle(id)?;
        let mut handle = handle.lock().unwrap();
        if !(-5..=5).contains(&request.value) {
            return Err(ServiceError::Validation(format!(
                "rating {} outside [-5, 5]",
                request.value
            )));
        }
        if handle.state.ratings.iter().any(|r| r.metric == request.metric) {
            return Err(ServiceError::Conflict(format!("{:?} already rated", request.metric)));
        }
        let rating = BipolarRating {
            session_id: id.to_string(),
            metric: request.metric,
            value: request.value as i8,
            timestamp: handle.state.stamp(self.clock.now()),
        };
        commit(&mut handle, LogEntry::Rating(rating.clone()))?;
        Ok(rating)
    }

    pub fn export(&self, id: &str) -> Result<ExportDocument, ServiceError> {
        let handle = self.handle(id)?;
        let handle = handle.lock().unwrap();
        ExportDocument::from_state(&handle.state).map_err(|e| ServiceError::Internal(e.to_string()))
    }
}

fn open_log(path: &Path) -> Result<File, ServiceError> {
    OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| ServiceError::Log(format!("{}: {e}", path.display())))
}

fn write_entry(handle: &mut Handle, entry: &LogEntry) -> Result<(), ServiceError> {
    if let Some(file) = &mut handle.log {
        let mut line = serde_json::to_string(entry).expect("log entries always serialize");
        line.push('\n');
        file.write_all(line.as_bytes())
            .and_then(|_| file.flush())
            .map_err(|e| ServiceError::Log(e.to_string()))?;
    }
    Ok(())
}

/// Log first, then apply, so memory never runs ahead of the file.
fn commit(handle: &mut Handle, entry: LogEntry) -> Result<(), ServiceError> {
    write_entry(handle, &entry)?;
    handle.state.apply(entry);
    Ok(())
}

/// Rebuild a session from its JSONL log.
pub fn read_session_log(path: impl AsRef<Path>) -> Result<SessionState, ServiceError> {
    let path = path.as_ref();
    let err = |m: String| ServiceError::Log(format!("{}: {m}", path.display()));
    let file = File::open(path).map_err(|e| err(e.to_string()))?;
    let mut entries = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| err(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        entries.push(serde_json::from_str(&line).map_err(|e| err(format!("line {}: {e}", n + 1)))?);
    }
    SessionState::replay(entries).map_err(err)
}
