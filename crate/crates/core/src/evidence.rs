//! Evidence artifacts built from raw WoE values: significance categories,
//! per-hypothesis reports, the three presentation conditions and posterior
//! uncertainty.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{GaussianEvidenceModel, Label, WoeError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvidenceError {
    #[error(transparent)]
    Model(#[from] WoeError),
    #[error("invalid value: {0}")]
    InvalidValue(String),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid significance scale: {0}")]
    InvalidScale(String),
}

/// Seven ordered significance categories, symmetric around zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Category {
    DecisiveAgainst,
    StrongAgainst,
    SubstantialAgainst,
    NotSignificant,
    SubstantialInFavour,
    StrongInFavour,
    DecisiveInFavour,
}

impl Category {
    pub const ALL: [Category; 7] = [
        Self::DecisiveAgainst,
        Self::StrongAgainst,
        Self::SubstantialAgainst,
        Self::NotSignificant,
        Self::SubstantialInFavour,
        Self::StrongInFavour,
        Self::DecisiveInFavour,
    ];

    pub fn glyph(self) -> &'static str {
        match self {
            Self::DecisiveAgainst => "---",
            Self::StrongAgainst => "--",
            Self::SubstantialAgainst => "-",
            Self::NotSignificant => "N",
            Self::SubstantialInFavour => "+",
            Self::StrongInFavour => "++",
            Self::DecisiveInFavour => "+++",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::DecisiveAgainst => "decisive-against",
            Self::StrongAgainst => "strong-against",
            Self::SubstantialAgainst => "substantial-against",
            Self::NotSignificant => "not-significant",
            Self::SubstantialInFavour => "substantial-in-favour",
            Self::StrongInFavour => "strong-in-favour",
            Self::DecisiveInFavour => "decisive-in-favour",
        }
    }

    /// The category on the other side of zero with the same strength.
    pub fn mirror(self) -> Self {
        Self::ALL[6 - self as usize]
    }

    /// Signed strength in `-3..=3`.
    pub fn level(self) -> i8 {
        self as i8 - 3
    }
}

impl std::fmt::Display for Category {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Thresholds `t1 < t2 < t3` on `|woe|` (natural-log units).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignificanceScale {
    thresholds: [f64; 3],
}

impl Default for SignificanceScale {
    /// `ln √10`, `ln 10`, `ln 100` rounded to two decimals.
    fn default() -> Self {
        Self {
            thresholds: [1.15, 2.30, 4.61],
        }
    }
}

impl SignificanceScale {
    pub fn new(thresholds: [f64; 3]) -> Result<Self, EvidenceError> {
        let [t1, t2, t3] = thresholds;
        if !(t1.is_finite() && t2.is_finite() && t3.is_finite()) || !(0.0 < t1 && t1 < t2 && t2 < t3) {
            return Err(EvidenceError::InvalidScale(format!(
                "thresholds must be positive and strictly increasing, got {thresholds:?}"
            )));
        }
        Ok(Self { thresholds })
    }

    pub fn thresholds(&self) -> [f64; 3] {
        self.thresholds
    }

    pub fn bucket(&self, woe: f64) -> Result<Category, EvidenceError> {
        bucket(woe, self)
    }
}

pub fn bucket(woe: f64, scale: &SignificanceScale) -> Result<Category, EvidenceError> {
    if !woe.is_finite() {
        return Err(EvidenceError::InvalidValue(format!("woe {woe} is not finite")));
    }
    let [t1, t2, t3] = scale.thresholds;
    let magnitude = woe.abs();
    let in_favour = if magnitude <= t1 {
        return Ok(Category::NotSignificant);
    } else if magnitude <= t2 {
        Category::SubstantialInFavour
    } else if magnitude <= t3 {
        Category::StrongInFavour
    } else {
        Category::DecisiveInFavour
    };
    Ok(if woe > 0.0 { in_favour } else { in_favour.mirror() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Supports,
    Refutes,
    Neutral,
}

impl Direction {
    fn of(category: Category) -> Self {
        match category.level() {
            0 => Self::Neutral,
            l if l > 0 => Self::Supports,
            _ => Self::Refutes,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceItem {
    pub feature_id: usize,
    pub feature_name: String,
    pub woe: f64,
    pub category: Category,
    pub direction: Direction,
}

/// Evidence for one hypothesis, items sorted by `|woe|` descending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub hypothesis: Label,
    pub items: Vec<EvidenceItem>,
    pub total_woe: f64,
    pub weighted_total_woe: f64,
    pub gamma_used: Vec<f64>,
}

/// A report with the hypothesis removed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RedactedReport {
    pub items: Vec<EvidenceItem>,
    pub total_woe: f64,
    pub weighted_total_woe: f64,
    pub gamma_used: Vec<f64>,
}

impl HypothesisReport {
    pub fn redact(self) -> RedactedReport {
        RedactedReport {
            items: self.items,
            total_woe: self.total_woe,
            weighted_total_woe: self.weighted_total_woe,
            gamma_used: self.gamma_used,
        }
    }
}

pub fn report(
    model: &GaussianEvidenceModel,
    x: &[f64],
    h: usize,
    gamma: Option<&[f64]>,
    scale: &SignificanceScale,
) -> Result<HypothesisReport, EvidenceError> {
    if let Some(g) = gamma {
        model.check_gamma(g)?;
    }
    let woes = model.woe_per_feature(h, x)?;
    let gamma_used = gamma.map_or_else(|| vec![1.0; woes.len()], <[f64]>::to_vec);
    let total_woe = woes.iter().sum();
    let weighted_total_woe = woes.iter().zip(&gamma_used).map(|(w, g)| g * w).sum();
    let mut items = woes
        .iter()
        .enumerate()
        .map(|(i, &woe)| {
            let category = bucket(woe, scale)?;
            Ok(EvidenceItem {
                feature_id: i,
                feature_name: model.feature_names()[i].clone(),
                woe,
                category,
                direction: Direction::of(category),
            })
        })
        .collect::<Result<Vec<_>, EvidenceError>>()?;
    items.sort_by(|a, b| b.woe.abs().total_cmp(&a.woe.abs()).then(a.feature_id.cmp(&b.feature_id)));
    Ok(HypothesisReport {
        hypothesis: model.label(h)?.clone(),
        items,
        total_woe,
        weighted_total_woe,
        gamma_used,
    })
}

/// Decision-support presentation condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Condition {
    /// Recommendation-driven: prediction plus its evidence.
    C1,
    /// AI-explanation-only: evidence for the prediction, label hidden.
    C2,
    /// Hypothesis-driven: evidence for every hypothesis, no prediction.
    C3,
}

impl Condition {
    pub fn description(self) -> &'static str {
        match self {
            Self::C1 => "recommendation-driven",
            Self::C2 => "ai-explanation-only",
            Self::C3 => "hypothesis-driven",
        }
    }
}

impl std::str::FromStr for Condition {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "c1" | "recommendation-driven" => Ok(Self::C1),
            "c2" | "ai-explanation-only" => Ok(Self::C2),
            "c3" | "hypothesis-driven" => Ok(Self::C3),
            other => Err(format!("unknown condition '{other}'")),
        }
    }
}

impl std::fmt::Display for Condition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "condition")]
pub enum ConditionView {
    #[serde(rename = "C1")]
    RecommendationDriven {
        prediction: Label,
        report: HypothesisReport,
    },
    #[serde(rename = "C2")]
    ExplanationOnly { report: RedactedReport },
    #[serde(rename = "C3")]
    HypothesisDriven { reports: Vec<HypothesisReport> },
}

impl ConditionView {
    pub fn condition(&self) -> Condition {
        match self {
            Self::RecommendationDriven { .. } => Condition::C1,
            Self::ExplanationOnly { .. } => Condition::C2,
            Self::HypothesisDriven { .. } => Condition::C3,
        }
    }
}

pub fn condition_view(
    model: &GaussianEvidenceModel,
    x: &[f64],
    condition: Condition,
    gamma: Option<&[f64]>,
    scale: &SignificanceScale,
) -> Result<ConditionView, EvidenceError> {
    Ok(match condition {
        Condition::C1 => {
            let predicted = model.classify(x)?;
            ConditionView::RecommendationDriven {
                prediction: model.label(predicted)?.clone(),
                report: report(model, x, predicted, gamma, scale)?,
            }
        }
        Condition::C2 => {
            let predicted = model.classify(x)?;
            ConditionView::ExplanationOnly {
                report: report(model, x, predicted, gamma, scale)?.redact(),
            }
        }
        Condition::C3 => ConditionView::HypothesisDriven {
            reports: (0..model.num_classes())
                .map(|h| report(model, x, h, gamma, scale))
                .collect::<Result<_, _>>()?,
        },
    })
}

/// Shannon entropy `-Σ p ln p` of a distribution, with `0 ln 0 = 0`.
pub fn uncertainty(posterior: &[f64]) -> Result<f64, EvidenceError> {
    if posterior.is_empty() {
        return Err(EvidenceError::InvalidDistribution("empty distribution".into()));
    }
    if let Some(p) = posterior.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
        return Err(EvidenceError::InvalidDistribution(format!("entry {p} is not a probability")));
    }
    let sum: f64 = posterior.iter().sum();
    if (sum - 1.0).abs() > 1e-6 {
        return Err(EvidenceError::InvalidDistribution(format!("entries sum to {sum}")));
    }
    Ok(-posterior
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|p| p * p.ln())
        .sum::<f64>())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedHypothesis {
    pub label: Label,
    pub posterior: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisRanking {
    pub entries: Vec<RankedHypothesis>,
    pub uncertainty: f64,
}

/// Hypotheses by posterior descending, ties by label id.
pub fn rank_hypotheses(
    model: &GaussianEvidenceModel,
    x: &[f64],
) -> Result<HypothesisRanking, EvidenceError> {
    let posterior = model.posterior(x)?;
    let uncertainty = uncertainty(&posterior)?;
    let mut entries: Vec<RankedHypothesis> = model
        .labels()
        .iter()
        .zip(&posterior)
        .map(|(label, &p)| RankedHypothesis {
            label: label.clone(),
            posterior: p,
        })
        .collect();
    entries.sort_by(|a, b| b.posterior.total_cmp(&a.posterior).then(a.label.id.cmp(&b.label.id)));
    Ok(HypothesisRanking {
        entries,
        uncertainty,
    })
}

#[cfg(test)]
mod tests {
    use nalgebra::{DMatrix, DVector};

    use super::*;
    use crate::model::{Assumption, ClassStats};

    fn iso_model(means: &[&[f64]]) -> GaussianEvidenceModel {
        let d = means[0].len();
        let k = means.len();
        GaussianEvidenceModel::from_parts(
            ["low", "medium", "high", "x4"][..k].iter().map(|s| s.to_string()).collect(),
            (0..d).map(|i| format!("area_{i}")).collect(),
            means
                .iter()
                .map(|m| ClassStats::new(DVector::from_column_slice(m), DMatrix::identity(d, d), 1.0 / k as f64))
                .collect(),
            Assumption::Dependent,
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn bucket_hand_values() {
        let s = SignificanceScale::default();
        assert_eq!(bucket(0.0, &s).unwrap(), Category::NotSignificant);
        assert_eq!(bucket(-5.0, &s).unwrap(), Category::DecisiveAgainst);
        assert_eq!(bucket(2.5, &s).unwrap(), Category::StrongInFavour);
        assert_eq!(bucket(1.15, &s).unwrap(), Category::NotSignificant);
        assert_eq!(bucket(-1.2, &s).unwrap(), Category::SubstantialAgainst);
        assert_eq!(bucket(4.61, &s).unwrap(), Category::StrongInFavour);
        assert!(bucket(f64::NAN, &s).is_err());
    }

    #[test]
    fn scale_validation() {
        assert!(SignificanceScale::new([1.0, 1.0, 2.0]).is_err());
        assert!(SignificanceScale::new([0.0, 1.0, 2.0]).is_err());
        assert!(SignificanceScale::new([0.5, 1.0, 2.0]).is_ok());
    }

    #[test]
    fn mirror_and_glyphs() {
        for c in Category::ALL {
            assert_eq!(c.mirror().mirror(), c);
            assert_eq!(c.mirror().level(), -c.level());
        }
        assert_eq!(Category::StrongAgainst.glyph(), "--");
        assert_eq!(serde_json::to_string(&Category::SubstantialInFavour).unwrap(), "\"substantial-in-favour\"");
    }

    #[test]
    fn identical_classes_give_neutral_report() {
        let m = iso_model(&[&[0.0, 0.0], &[0.0, 0.0], &[0.0, 0.0]]);
        let r = report(&m, &[0.3, -2.0], 1, None, &SignificanceScale::default()).unwrap();
        assert_eq!(r.items.len(), 2);
        assert!(r.items.iter().all(|i| i.direction == Direction::Neutral));
        assert!(r.total_woe.abs() < 1e-12);
    }

    #[test]
    fn single_feature_total_equals_item() {
        let m = iso_model(&[&[0.0], &[2.0]]);
        let r = report(&m, &[1.7], 0, None, &SignificanceScale::default()).unwrap();
        assert_eq!(r.total_woe, r.items[0].woe);
        assert_eq!(r.hypothesis.name, "low");
    }

    #[test]
    fn items_sorted_by_magnitude_then_id() {
        let m = iso_model(&[&[0.0, 0.0, 0.0], &[1.0, 3.0, -1.0]]);
        let r = report(&m, &[0.0, 0.0, 0.0], 0, Some(&[1.0, 0.0, 2.0]), &SignificanceScale::default()).unwrap();
        let ids: Vec<usize> = r.items.iter().map(|i| i.feature_id).collect();
        // |woe| = 0.5, 4.5, 0.5
        assert_eq!(ids, vec![1, 0, 2]);
        assert!((r.weighted_total_woe - (0.5 + 0.0 + 2.0 * 0.5)).abs() < 1e-12);
    }

    #[test]
    fn condition_payload_shapes() {
        let m = iso_model(&[&[0.0, 0.0], &[3.0, 0.0], &[0.0, 3.0]]);
        let s = SignificanceScale::default();
        let x = [2.5, 0.2];
        match condition_view(&m, &x, Condition::C3, None, &s).unwrap() {
            ConditionView::HypothesisDriven { reports } => assert_eq!(reports.len(), 3),
            other => panic!("unexpected {other:?}"),
        }
        match condition_view(&m, &x, Condition::C1, None, &s).unwrap() {
            ConditionView::RecommendationDriven { prediction, .. } => {
                assert_eq!(prediction.id, m.classify(&x).unwrap())
            }
            other => panic!("unexpected {other:?}"),
        }
        let c2 = serde_json::to_string(&condition_view(&m, &x, Condition::C2, None, &s).unwrap()).unwrap();
        for label in m.labels() {
            assert!(!c2.contains(&label.name), "{c2}");
        }
        assert!(!c2.contains("hypothesis"));
    }

    #[test]
    fn entropy_values() {
        assert_eq!(uncertainty(&[1.0, 0.0, 0.0]).unwrap(), 0.0);
        let u = uncertainty(&[1.0 / 3.0; 3]).unwrap();
        assert!((u - 3f64.ln()).abs() < 1e-12);
        let u = uncertainty(&[0.98, 0.01, 0.01]).unwrap();
        let direct = -(0.98f64 * 0.98f64.ln() + 2.0 * 0.01 * 0.01f64.ln());
        assert!((u - direct).abs() < 1e-15);
        assert!((u - 0.112).abs() < 5e-4);
        assert!(uncertainty(&[0.5, 0.6]).is_err());
        assert!(uncertainty(&[-0.1, 1.1]).is_err());
    }

    #[test]
    fn ranking_ties_and_separation() {
        let m = iso_model(&[&[0.0], &[0.0], &[0.0]]);
        let ids: Vec<usize> = rank_hypotheses(&m, &[4.0]).unwrap().entries.iter().map(|e| e.label.id).collect();
        assert_eq!(ids, vec![0, 1, 2]);
        let m = iso_model(&[&[0.0], &[5.0], &[10.0]]);
        assert_eq!(rank_hypotheses(&m, &[9.0]).unwrap().entries[0].label.id, 2);
    }
}
