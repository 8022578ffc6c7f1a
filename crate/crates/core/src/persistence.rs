//! Versioned JSON documents for fitted models and other study artifacts.
//!
//! Floats are written in shortest round-trip form and parsed with correct
//! rounding, so a saved model reloads bit for bit.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evidence::{EvidenceError, SignificanceScale};
use crate::model::{Assumption, ClassStats, GaussianEvidenceModel, WoeError};

pub const MODEL_FORMAT: &str = "woe-model";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unsupported format version {found} (this build reads {supported})")]
    VersionMismatch { found: u64, supported: u32 },
    #[error("not a {expected} document")]
    WrongFormat { expected: &'static str },
    #[error("integrity error: {0}")]
    Integrity(String),
}

impl From<WoeError> for PersistError {
    fn from(e: WoeError) -> Self {
        Self::Integrity(e.to_string())
    }
}

impl From<EvidenceError> for PersistError {
    fn from(e: EvidenceError) -> Self {
        Self::Integrity(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassDocument {
    pub label: String,
    pub prior: f64,
    pub mean: Vec<f64>,
    /// Row-major `d × d`.
    pub covariance: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    pub format: String,
    pub format_version: u32,
    pub feature_names: Vec<String>,
    pub assumption: Assumption,
    pub ridge: f64,
    pub classes: Vec<ClassDocument>,
    pub significance_thresholds: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_defaults: Option<Vec<f64>>,
}

impl ModelDocument {
    pub fn from_model(model: &GaussianEvidenceModel, scale: &SignificanceScale) -> Self {
        Self {
            format: MODEL_FORMAT.into(),
            format_version: FORMAT_VERSION,
            feature_names: model.feature_names().to_vec(),
            assumption: model.assumption(),
            ridge: model.ridge(),
            classes: model
                .labels()
                .iter()
                .zip(model.class_stats())
                .map(|(label, s)| ClassDocument {
                    label: label.name.clone(),
                    prior: s.prior,
                    mean: s.mean.iter().copied().collect(),
                    // nalgebra is column-major; transpose to emit rows.
                    covariance: s.covariance.transpose().iter().copied().collect(),
                })
                .collect(),
            significance_thresholds: scale.thresholds(),
            gamma_defaults: None,
        }
    }

    pub fn with_gamma(mut self, gamma: Vec<f64>) -> Self {
        self.gamma_defaults = Some(gamma);
        self
    }

    /// Rebuild and validate the model and scale.
    pub fn into_model(self) -> Result<(GaussianEvidenceModel, SignificanceScale), PersistError> {
        if self.format != MODEL_FORMAT {
            return Err(PersistError::WrongFormat { expected: MODEL_FORMAT });
        }
        let d = self.feature_names.len();
        let mut names = Vec::with_capacity(self.classes.len());
        let mut stats = Vec::with_capacity(self.classes.len());
        for c in self.classes {
            if c.mean.len() != d || c.covariance.len() != d * d {
                return Err(PersistError::Integrity(format!(
                    "class '{}' statistics do not match {d} features",
                    c.label
                )));
            }
            stats.push(ClassStats::new(
                DVector::from_vec(c.mean),
                DMatrix::from_row_slice(d, d, &c.covariance),
                c.prior,
            ));
            names.push(c.label);
        }
        let model = GaussianEvidenceModel::from_parts(names, self.feature_names, stats, self.assumption, self.ridge)?;
        if let Some(g) = &self.gamma_defaults {
            model.check_gamma(g)?;
        }
        let scale = SignificanceScale::new(self.significance_thresholds)?;
        Ok((model, scale))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model documents always serialize")
    }

    /// Parse, checking the version before the body.
    pub fn from_json(text: &str) -> Result<Self, PersistError> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let version = value
            .get("format_version")
            .and_then(serde_json::Value::as_u64)
            .ok_or(PersistError::WrongFormat { expected: MODEL_FORMAT })?;
        if version != u64::from(FORMAT_VERSION) {
            return Err(PersistError::VersionMismatch {
                found: version,
                supported: FORMAT_VERSION,
            });
        }
        Ok(serde_json::from_value(value)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), PersistError> {
        write_text(path.as_ref(), &self.to_json())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PersistError> {
        Self::from_json(&read_text(path.as_ref())?)
    }
}

pub fn save_model(
    model: &GaussianEvidenceModel,
    scale: &SignificanceScale,
    path: impl AsRef<Path>,
) -> Result<(), PersistError> {
    ModelDocument::from_model(model, scale).save(path)
}

pub fn load_model(
    path: impl AsRef<Path>,
) -> Result<(GaussianEvidenceModel, SignificanceScale), PersistError> {
    ModelDocument::load(path)?.into_model()
}

/// Serialize any artifact (report, view, metric summary) as pretty JSON.
pub fn to_document<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("artifact types always serialize")
}

pub fn from_document<T: DeserializeOwned>(text: &str) -> Result<T, PersistError> {
    Ok(serde_json::from_str(text)?)
}

pub fn write_document<T: Serialize>(value: &T, path: impl AsRef<Path>) -> Result<(), PersistError> {
    write_text(path.as_ref(), &to_document(value))
}

pub fn read_document<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T, PersistError> {
    from_document(&read_text(path.as_ref())?)
}

fn write_text(path: &Path, text: &str) -> Result<(), PersistError> {
    std::fs::write(path, text).map_err(|source| PersistError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn read_text(path: &Path) -> Result<String, PersistError> {
    std::fs::read_to_string(path).map_err(|source| PersistError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "format": "woe-model",
        "format_version": 1,
        "feature_names": ["x"],
        "assumption": "independent",
        "ridge": 0.0,
        "classes": [
            {"label": "a", "prior": 0.5, "mean": [0.0], "covariance": [1.0]},
            {"label": "b", "prior": 0.5, "mean": [4.0], "covariance": [1.0]}
        ],
        "significance_thresholds": [1.15, 2.3, 4.61]
    }"#;

    #[test]
    fn minimal_document_loads_and_classifies() {
        let (model, scale) = ModelDocument::from_json(MINIMAL).unwrap().into_model().unwrap();
        assert_eq!(model.classify(&[0.5]).unwrap(), 0);
        assert_eq!(model.classify(&[3.5]).unwrap(), 1);
        assert_eq!(scale, SignificanceScale::default());
    }

    #[test]
    fn key_order_does_not_matter() {
        let reordered = r#"{"significance_thresholds": [1.15, 2.3, 4.61], "ridge": 0.0,
            "classes": [{"covariance": [1.0], "mean": [0.0], "prior": 0.5, "label": "a"},
                        {"mean": [4.0], "label": "b", "covariance": [1.0], "prior": 0.5}],
            "assumption": "independent", "feature_names": ["x"], "format_version": 1, "format": "woe-model"}"#;
        assert_eq!(
            ModelDocument::from_json(reordered).unwrap(),
            ModelDocument::from_json(MINIMAL).unwrap()
        );
    }

    #[test]
    fn version_and_integrity_checks() {
        let future = MINIMAL.replace("\"format_version\": 1", "\"format_version\": 2");
        assert!(matches!(
            ModelDocument::from_json(&future),
            Err(PersistError::VersionMismatch { found: 2, .. })
        ));
        let tampered = MINIMAL.replace("\"prior\": 0.5, \"mean\": [4.0]", "\"prior\": 1.0, \"mean\": [4.0]");
        assert_ne!(tampered, MINIMAL);
        let err = ModelDocument::from_json(&tampered).unwrap().into_model().unwrap_err();
        assert!(matches!(err, PersistError::Integrity(m) if m.contains("sum")));
    }

    #[test]
    fn asymmetric_covariance_is_rejected() {
        let doc = MINIMAL
            .replace("\"feature_names\": [\"x\"]", "\"feature_names\": [\"x\", \"y\"]")
            .replace("\"mean\": [0.0], \"covariance\": [1.0]", "\"mean\": [0.0, 0.0], \"covariance\": [1.0, 0.2, 0.3, 1.0]")
            .replace("\"mean\": [4.0], \"covariance\": [1.0]", "\"mean\": [4.0, 0.0], \"covariance\": [1.0, 0.0, 0.0, 1.0]");
        let err = ModelDocument::from_json(&doc).unwrap().into_model().unwrap_err();
        assert!(matches!(err, PersistError::Integrity(m) if m.contains("asymmetric")));
    }

    #[test]
    fn truncation_never_yields_a_model() {
        for cut in 0..MINIMAL.len() {
            let prefix = &MINIMAL[..cut];
            let parsed = ModelDocument::from_json(prefix).and_then(ModelDocument::into_model);
            assert!(parsed.is_err(), "prefix of length {cut} parsed");
        }
    }
}
