//! Gaussian class-conditional models and the weight-of-evidence quantities
//! computed from them.
//!
//! A [`GaussianEvidenceModel`] holds one mean vector, covariance matrix and
//! prior per hypothesis. Densities are evaluated in natural-log space. Under
//! [`Assumption::Independent`] every density computation reads only the
//! diagonal of the covariance; under [`Assumption::Dependent`] the full matrix
//! is used and features are conditioned on the remaining ones.

mod density;
mod woe;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::LabeledTable;

pub use woe::{Decomposition, MixtureNormalization};

/// Default ridge added to covariance diagonals at fit time.
pub const DEFAULT_RIDGE: f64 = 1e-6;

/// Tolerance for the priors summing to one and for covariance symmetry.
pub const INTEGRITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WoeError {
    #[error("class '{label}' has {count} samples, at least 2 are required")]
    UnderpopulatedClass { label: String, count: usize },
    #[error("invalid data: {0}")]
    InvalidData(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("variance of feature {feature} is not positive for class '{label}'")]
    SingularVariance { label: String, feature: usize },
    #[error("covariance is singular for class '{label}'")]
    SingularCovariance { label: String },
    #[error("hypothesis '{label}' has no alternatives to compare against")]
    NoAlternatives { label: String },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("unknown label id {0}")]
    UnknownLabel(usize),
    #[error("invalid feature subset: {0}")]
    InvalidSubset(String),
}

/// A hypothesis: one output class of the model.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Label {
    pub id: usize,
    pub name: String,
}

/// How the covariance matrix is used by density computations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Assumption {
    /// Only the diagonal is used; each feature has a univariate density.
    Independent,
    /// Full covariance; features are conditioned on the others.
    #[default]
    Dependent,
}

impl std::str::FromStr for Assumption {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "independent" => Ok(Self::Independent),
            "dependent" => Ok(Self::Dependent),
            other => Err(format!("unknown assumption '{other}'")),
        }
    }
}

/// Sufficient statistics of one hypothesis.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassStats {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
    pub prior: f64,
}

impl ClassStats {
    pub fn new(mean: DVector<f64>, covariance: DMatrix<f64>, prior: f64) -> Self {
        Self {
            mean,
            covariance,
            prior,
        }
    }
}

/// Sorted, duplicate-free, non-empty set of feature indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FeatureSubset(Vec<usize>);

impl FeatureSubset {
    pub fn new(mut indices: Vec<usize>) -> Result<Self, WoeError> {
        if indices.is_empty() {
            return Err(WoeError::InvalidSubset("subset is empty".into()));
        }
        indices.sort_unstable();
        indices.dedup();
        Ok(Self(indices))
    }

    pub fn single(index: usize) -> Self {
        Self(vec![index])
    }

    pub fn all(dim: usize) -> Self {
        Self((0..dim).collect())
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Indices in `0..dim` that are not in the subset.
    pub fn complement(&self, dim: usize) -> Vec<usize> {
        (0..dim).filter(|i| self.0.binary_search(i).is_err()).collect()
    }
}

/// A validated input point: finite values only.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self, WoeError> {
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(WoeError::InvalidData(format!(
                "feature {pos} is not finite"
            )));
        }
        Ok(Self(values))
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Deref for FeatureVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Fitted per-hypothesis Gaussian statistics.
///
/// Immutable after construction, so a model can be shared across threads
/// behind an `Arc` without coordination.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianEvidenceModel {
    labels: Vec<Label>,
    feature_names: Vec<String>,
    per_class: Vec<ClassStats>,
    assumption: Assumption,
    ridge: f64,
}

impl GaussianEvidenceModel {
    /// Estimate per-class sample means, unbiased sample covariances (with
    /// `ridge` added to the diagonal) and empirical priors.
    pub fn fit(
        table: &LabeledTable,
        assumption: Assumption,
        ridge: f64,
    ) -> Result<Self, WoeError> {
        if !(ridge.is_finite() && ridge >= 0.0) {
            return Err(WoeError::InvalidData(format!("ridge must be >= 0, got {ridge}")));
        }
        let dim = table.feature_names().len();
        if dim == 0 {
            return Err(WoeError::InvalidData("table has no features".into()));
        }
        let k = table.label_names().len();
        let mut groups: Vec<Vec<&[f64]>> = vec![Vec::new(); k];
        for (row, &label) in table.rows().iter().zip(table.labels()) {
            if let Some(pos) = row.iter().position(|v| !v.is_finite()) {
                return Err(WoeError::InvalidData(format!("non-finite value in column {pos}")));
            }
            groups[label].push(row);
        }
        let total = table.len() as f64;
        let mut per_class = Vec::with_capacity(k);
        for (label, rows) in groups.iter().enumerate() {
            if rows.len() < 2 {
                return Err(WoeError::UnderpopulatedClass {
                    label: table.label_names()[label].clone(),
                    count: rows.len(),
                });
            }
            let n = rows.len() as f64;
            let mut mean = DVector::zeros(dim);
            for row in rows {
                for (m, v) in mean.iter_mut().zip(row.iter()) {
                    *m += v;
                }
            }
            mean /= n;
            let mut cov = DMatrix::zeros(dim, dim);
            for row in rows {
                for i in 0..dim {
                    let di = row[i] - mean[i];
                    for j in i..dim {
                        cov[(i, j)] += di * (row[j] - mean[j]);
                    }
                }
            }
            for i in 0..dim {
                for j in i..dim {
                    let v = cov[(i, j)] / (n - 1.0);
                    cov[(i, j)] = v;
                    cov[(j, i)] = v;
                }
                cov[(i, i)] += ridge;
            }
            per_class.push(ClassStats::new(mean, cov, n / total));
        }
        Self::from_parts(
            table.label_names().to_vec(),
            table.feature_names().to_vec(),
            per_class,
            assumption,
            ridge,
        )
    }

    /// Assemble a model from explicit statistics, validating every invariant.
    ///
    /// Covariances are taken as final (any ridge is assumed to be included
    /// already) and are symmetrized after the symmetry check.
    pub fn from_parts(
        label_names: Vec<String>,
        feature_names: Vec<String>,
        mut per_class: Vec<ClassStats>,
        assumption: Assumption,
        ridge: f64,
    ) -> Result<Self, WoeError> {
        let invalid = |msg: String| Err(WoeError::InvalidModel(msg));
        if label_names.is_empty() {
            return invalid("at least one label is required".into());
        }
        for (i, name) in label_names.iter().enumerate() {
            if name.is_empty() {
                return invalid(format!("label {i} has an empty name"));
            }
            if label_names[..i].contains(name) {
                return invalid(format!("duplicate label name '{name}'"));
            }
        }
        let dim = feature_names.len();
        if dim == 0 {
            return invalid("at least one feature is required".into());
        }
        if per_class.len() != label_names.len() {
            return invalid(format!(
                "{} labels but {} class statistics",
                label_names.len(),
                per_class.len()
            ));
        }
        if !(ridge.is_finite() && ridge >= 0.0) {
            return invalid(format!("ridge must be >= 0, got {ridge}"));
        }
        let mut prior_sum = 0.0;
        for (name, stats) in label_names.iter().zip(per_class.iter_mut()) {
            if stats.mean.len() != dim {
                return invalid(format!("mean of '{name}' has length {}", stats.mean.len()));
            }
            if stats.covariance.shape() != (dim, dim) {
                return invalid(format!("covariance of '{name}' is not {dim}x{dim}"));
            }
            if stats.mean.iter().chain(stats.covariance.iter()).any(|v| !v.is_finite()) {
                return invalid(format!("statistics of '{name}' contain non-finite values"));
            }
            for i in 0..dim {
                for j in (i + 1)..dim {
                    let (a, b) = (stats.covariance[(i, j)], stats.covariance[(j, i)]);
                    if (a - b).abs() > INTEGRITY_TOLERANCE {
                        return invalid(format!(
                            "covariance of '{name}' is asymmetric at ({i},{j}): {a} vs {b}"
                        ));
                    }
                    let avg = 0.5 * (a + b);
                    stats.covariance[(i, j)] = avg;
                    stats.covariance[(j, i)] = avg;
                }
            }
            if !(stats.prior > 0.0 && stats.prior <= 1.0) {
                return invalid(format!("prior of '{name}' is {} (must be in (0,1])", stats.prior));
            }
            prior_sum += stats.prior;
        }
        if (prior_sum - 1.0).abs() > INTEGRITY_TOLERANCE {
            return invalid(format!("priors sum to {prior_sum}"));
        }
        let labels = label_names
            .into_iter()
            .enumerate()
            .map(|(id, name)| Label { id, name })
            .collect();
        Ok(Self {
            labels,
            feature_names,
            per_class,
            assumption,
            ridge,
        })
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn label(&self, id: usize) -> Result<&Label, WoeError> {
        self.labels.get(id).ok_or(WoeError::UnknownLabel(id))
    }

    pub fn num_classes(&self) -> usize {
        self.labels.len()
    }

    pub fn dim(&self) -> usize {
        self.feature_names.len()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn class_stats(&self) -> &[ClassStats] {
        &self.per_class
    }

    pub fn assumption(&self) -> Assumption {
        self.assumption
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    /// The same statistics read under a different covariance assumption.
    pub fn with_assumption(&self, assumption: Assumption) -> Self {
        Self {
            assumption,
            ..self.clone()
        }
    }

    pub(crate) fn check_label(&self, h: usize) -> Result<(), WoeError> {
        if h < self.labels.len() {
            Ok(())
        } else {
            Err(WoeError::UnknownLabel(h))
        }
    }

    pub(crate) fn check_input(&self, x: &[f64]) -> Result<(), WoeError> {
        if x.len() != self.dim() {
            return Err(WoeError::Dimension {
                expected: self.dim(),
                got: x.len(),
            });
        }
        if let Some(pos) = x.iter().position(|v| !v.is_finite()) {
            return Err(WoeError::InvalidData(format!("feature {pos} is not finite")));
        }
        Ok(())
    }

    pub(crate) fn check_subset(&self, subset: &FeatureSubset) -> Result<(), WoeError> {
        match subset.indices().last() {
            Some(&max) if max < self.dim() => Ok(()),
            Some(&max) => Err(WoeError::InvalidSubset(format!(
                "index {max} out of range for {} features",
                self.dim()
            ))),
            None => Err(WoeError::InvalidSubset("subset is empty".into())),
        }
    }
}
