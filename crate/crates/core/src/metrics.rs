//! Study measures: Brier score, over- and under-reliance, precision/recall/F1,
//! uncertainty-based instance selection and per-participant aggregates.
//!
//! Metrics with an empty denominator return `None` rather than `0` or `NaN`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::LabeledTable;
use crate::evidence::{uncertainty, EvidenceError};
use crate::model::{GaussianEvidenceModel, WoeError};

/// Entropy below which an instance counts as low-uncertainty.
pub const LOW_UNCERTAINTY: f64 = 0.3;
/// Entropy above which an instance counts as high-uncertainty.
pub const HIGH_UNCERTAINTY: f64 = 0.7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("no responses")]
    Empty,
    #[error("{responses} responses but {traces} model traces")]
    LengthMismatch { responses: usize, traces: usize },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("no eligible instances for: {}", .0.iter().map(|c| c.name()).collect::<Vec<_>>().join(", "))]
    Shortfall(Vec<InstanceCategory>),
    #[error(transparent)]
    Model(#[from] WoeError),
    #[error(transparent)]
    Evidence(#[from] EvidenceError),
}

/// One participant answer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StudyResponse {
    confidence: f64,
    correct: bool,
    participant_label: usize,
    duration_secs: f64,
}

impl StudyResponse {
    pub fn new(
        confidence: f64,
        correct: bool,
        participant_label: usize,
        duration_secs: f64,
    ) -> Result<Self, MetricError> {
        if !(0.0..=1.0).contains(&confidence) {
            return Err(MetricError::Invalid(format!("confidence {confidence} outside [0,1]")));
        }
        if !(duration_secs.is_finite() && duration_secs >= 0.0) {
            return Err(MetricError::Invalid(format!("duration {duration_secs} must be >= 0")));
        }
        Ok(Self {
            confidence,
            correct,
            participant_label,
            duration_secs,
        })
    }

    pub fn confidence(&self) -> f64 {
        self.confidence
    }

    pub fn correct(&self) -> bool {
        self.correct
    }

    pub fn participant_label(&self) -> usize {
        self.participant_label
    }

    pub fn duration_secs(&self) -> f64 {
        self.duration_secs
    }
}

/// What the model said on a task and what the truth was.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelTrace {
    pub model_label: usize,
    pub true_label: usize,
}

impl ModelTrace {
    pub fn new(model_label: usize, true_label: usize) -> Self {
        Self {
            model_label,
            true_label,
        }
    }

    pub fn model_correct(&self) -> bool {
        self.model_label == self.true_label
    }
}

/// Confidence from a likelihood allocation: mass on the chosen class / 100.
pub fn confidence_from_allocation(allocation: &[f64], chosen: usize) -> Result<f64, MetricError> {
    validate_allocation(allocation)?;
    allocation
        .get(chosen)
        .map(|v| v / 100.0)
        .ok_or_else(|| MetricError::Invalid(format!("chosen label {chosen} has no allocation entry")))
}

/// Entries must be non-negative and sum to 100 (within 1e-6).
pub fn validate_allocation(allocation: &[f64]) -> Result<(), MetricError> {
    if let Some(v) = allocation.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(MetricError::Invalid(format!("allocation entry {v} must be non-negative")));
    }
    let sum: f64 = allocation.iter().sum();
    if (sum - 100.0).abs() > 1e-6 {
        return Err(MetricError::Invalid(format!("allocation sums to {sum}, expected 100")));
    }
    Ok(())
}

/// `(1/N) Σ (C_i - A_i)²`.
pub fn brier(responses: &[StudyResponse]) -> Result<f64, MetricError> {
    if responses.is_empty() {
        return Err(MetricError::Empty);
    }
    let sum: f64 = responses
        .iter()
        .map(|r| {
            let a = if r.correct { 1.0 } else { 0.0 };
            (r.confidence - a).powi(2)
        })
        .sum();
    Ok(sum / responses.len() as f64)
}

fn check_lengths(responses: &[StudyResponse], traces: &[ModelTrace]) -> Result<(), MetricError> {
    if responses.len() != traces.len() {
        return Err(MetricError::LengthMismatch {
            responses: responses.len(),
            traces: traces.len(),
        });
    }
    Ok(())
}

/// Among tasks where the model was wrong, the fraction where the participant
/// gave the model's label.
pub fn over_reliance(
    responses: &[StudyResponse],
    traces: &[ModelTrace],
) -> Result<Option<f64>, MetricError> {
    check_lengths(responses, traces)?;
    let (mut agree, mut total) = (0usize, 0usize);
    for (r, t) in responses.iter().zip(traces) {
        if !t.model_correct() {
            total += 1;
            agree += usize::from(r.participant_label == t.model_label);
        }
    }
    Ok((total > 0).then(|| agree as f64 / total as f64))
}

/// Among tasks where the model was right, the fraction where the participant
/// gave a different label.
pub fn under_reliance(
    responses: &[StudyResponse],
    traces: &[ModelTrace],
) -> Result<Option<f64>, MetricError> {
    check_lengths(responses, traces)?;
    let (mut differ, mut total) = (0usize, 0usize);
    for (r, t) in responses.iter().zip(traces) {
        if t.model_correct() {
            total += 1;
            differ += usize::from(r.participant_label != t.model_label);
        }
    }
    Ok((total > 0).then(|| differ as f64 / total as f64))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    /// Map multi-class traces onto positive/negative via `positive` labels
    /// (e.g. the malignant lesion classes).
    pub fn from_traces(traces: &[ModelTrace], positive: &BTreeSet<usize>) -> Self {
        let mut c = Self::default();
        for t in traces {
            match (positive.contains(&t.model_label), positive.contains(&t.true_label)) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                (false, false) => c.tn += 1,
            }
        }
        c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecisionRecallF1 {
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
}

/// `F1 = 2PR/(P+R)`; defined as 0 when both precision and recall are 0.
pub fn precision_recall_f1(counts: &ConfusionCounts) -> PrecisionRecallF1 {
    let ratio = |num: u64, den: u64| (den > 0).then(|| num as f64 / den as f64);
    let precision = ratio(counts.tp, counts.tp + counts.fp);
    let recall = ratio(counts.tp, counts.tp + counts.fn_);
    let f1 = match (precision, recall) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        (Some(_), Some(_)) => Some(0.0),
        _ => None,
    };
    PrecisionRecallF1 {
        precision,
        recall,
        f1,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InstanceCategory {
    CorrectHighUncertainty,
    CorrectLowUncertainty,
    WrongHighUncertainty,
    WrongLowUncertainty,
}

impl InstanceCategory {
    pub const ALL: [InstanceCategory; 4] = [
        Self::CorrectHighUncertainty,
        Self::CorrectLowUncertainty,
        Self::WrongHighUncertainty,
        Self::WrongLowUncertainty,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::CorrectHighUncertainty => "correct-high-uncertainty",
            Self::CorrectLowUncertainty => "correct-low-uncertainty",
            Self::WrongHighUncertainty => "wrong-high-uncertainty",
            Self::WrongLowUncertainty => "wrong-low-uncertainty",
        }
    }

    pub fn is_correct(self) -> bool {
        matches!(self, Self::CorrectHighUncertainty | Self::CorrectLowUncertainty)
    }

    pub fn is_high_uncertainty(self) -> bool {
        matches!(self, Self::CorrectHighUncertainty | Self::WrongHighUncertainty)
    }
}

/// Category for a prediction with the given entropy, or `None` when the
/// entropy lies in `[low, high]`.
pub fn categorize(correct: bool, entropy: f64, low: f64, high: f64) -> Option<InstanceCategory> {
    use InstanceCategory::*;
    match (correct, entropy < low, entropy > high) {
        (true, true, _) => Some(CorrectLowUncertainty),
        (true, _, true) => Some(CorrectHighUncertainty),
        (false, true, _) => Some(WrongLowUncertainty),
        (false, _, true) => Some(WrongHighUncertainty),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectedInstance {
    pub index: usize,
    pub entropy: f64,
    pub predicted: usize,
    pub true_label: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSelection {
    pub low_threshold: f64,
    pub high_threshold: f64,
    pub categories: BTreeMap<InstanceCategory, Vec<SelectedInstance>>,
    /// Categories with no eligible instance at all.
    pub shortfall: Vec<InstanceCategory>,
}

impl InstanceSelection {
    /// Error unless every category got at least one instance.
    pub fn require_complete(self) -> Result<Self, MetricError> {
        if self.shortfall.is_empty() {
            Ok(self)
        } else {
            Err(MetricError::Shortfall(self.shortfall))
        }
    }
}

/// A pool instance reduced to what selection needs.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredInstance {
    pub posterior: Vec<f64>,
    pub predicted: usize,
    pub true_label: usize,
}

/// Select up to `per_category` instances per category, in pool order.
pub fn select_scored(
    pool: &[ScoredInstance],
    low: f64,
    high: f64,
    per_category: usize,
) -> Result<InstanceSelection, MetricError> {
    if pool.is_empty() {
        return Err(MetricError::Empty);
    }
    if !(low < high) {
        return Err(MetricError::Invalid(format!("low threshold {low} must be below high {high}")));
    }
    let mut categories: BTreeMap<InstanceCategory, Vec<SelectedInstance>> =
        InstanceCategory::ALL.iter().map(|&c| (c, Vec::new())).collect();
    for (index, inst) in pool.iter().enumerate() {
        let entropy = uncertainty(&inst.posterior)?;
        let Some(cat) = categorize(inst.predicted == inst.true_label, entropy, low, high) else {
            continue;
        };
        let bucket = categories.get_mut(&cat).expect("all categories present");
        if bucket.len() < per_category {
            bucket.push(SelectedInstance {
                index,
                entropy,
                predicted: inst.predicted,
                true_label: inst.true_label,
            });
        }
    }
    let shortfall = categories
        .iter()
        .filter(|(_, v)| v.is_empty())
        .map(|(c, _)| *c)
        .collect();
    Ok(InstanceSelection {
        low_threshold: low,
        high_threshold: high,
        categories,
        shortfall,
    })
}

/// Score every pool row with the model and select by entropy of the posterior.
pub fn select_instances(
    model: &GaussianEvidenceModel,
    pool: &LabeledTable,
    low: f64,
    high: f64,
    per_category: usize,
) -> Result<InstanceSelection, MetricError> {
    let scored = pool
        .rows()
        .iter()
        .zip(pool.labels())
        .map(|(row, &true_label)| {
            Ok(ScoredInstance {
                posterior: model.posterior(row)?,
                predicted: model.classify(row)?,
                true_label,
            })
        })
        .collect::<Result<Vec<_>, WoeError>>()?;
    select_scored(&scored, low, high, per_category)
}

/// `|selected| / total`.
pub fn selected_hypotheses_pct(selected: &BTreeSet<usize>, total: usize) -> Result<f64, MetricError> {
    if total == 0 {
        return Err(MetricError::Invalid("total hypotheses must be >= 1".into()));
    }
    if let Some(&bad) = selected.iter().find(|&&h| h >= total) {
        return Err(MetricError::Invalid(format!("hypothesis {bad} out of range for {total}")));
    }
    Ok(selected.len() as f64 / total as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingSummary {
    pub total_secs: f64,
    pub mean_instance_secs: f64,
}

pub fn timing(responses: &[StudyResponse]) -> Result<TimingSummary, MetricError> {
    if responses.is_empty() {
        return Err(MetricError::Empty);
    }
    let total_secs: f64 = responses.iter().map(|r| r.duration_secs).sum();
    Ok(TimingSummary {
        total_secs,
        mean_instance_secs: total_secs / responses.len() as f64,
    })
}

/// The per-participant measures downstream statistics consume.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticipantSummary {
    pub tasks: usize,
    pub brier: f64,
    pub over_reliance: Option<f64>,
    pub under_reliance: Option<f64>,
    pub timing: TimingSummary,
}

pub fn summarize(
    responses: &[StudyResponse],
    traces: &[ModelTrace],
) -> Result<ParticipantSummary, MetricError> {
    Ok(ParticipantSummary {
        tasks: responses.len(),
        brier: brier(responses)?,
        over_reliance: over_reliance(responses, traces)?,
        under_reliance: under_reliance(responses, traces)?,
        timing: timing(responses)?,
    })
}
