//! Tabular and concept-activation ingestion plus the preparation steps applied
//! before fitting: target discretization, class balancing and stratified
//! splitting.

mod balance;
mod concepts;
mod csv_io;
mod discretize;
mod split;

use thiserror::Error;

pub use balance::{balance, BalanceStrategy};
pub use concepts::{load_concepts, parse_concepts, write_concepts, ConceptActivationTable};
pub use csv_io::{load_csv, read_csv, write_csv, CsvSchema};
pub use discretize::{discretize_target, Discretization};
pub use split::split;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("missing column '{0}'")]
    MissingColumn(String),
    #[error("line {line}: expected {expected} fields, found {found}")]
    RaggedRow {
        line: u64,
        expected: usize,
        found: usize,
    },
    #[error("line {line}, column '{column}': cannot parse '{value}' as a number")]
    NonNumeric {
        line: u64,
        column: String,
        value: String,
    },
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("table is empty")]
    Empty,
    #[error("invalid table: {0}")]
    Invalid(String),
    #[error("degenerate target: {0}")]
    DegenerateTarget(String),
    #[error("class '{0}' has no rows")]
    EmptyClass(String),
    #[error("class '{label}' has {count} rows, too few to split with train fraction {fraction}")]
    ClassTooSmall {
        label: String,
        count: usize,
        fraction: f64,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// Feature rows with class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledTable {
    feature_names: Vec<String>,
    label_names: Vec<String>,
    rows: Vec<Vec<f64>>,
    labels: Vec<usize>,
    provenance: String,
}

impl LabeledTable {
    pub fn new(
        feature_names: Vec<String>,
        label_names: Vec<String>,
        rows: Vec<Vec<f64>>,
        labels: Vec<usize>,
    ) -> Result<Self, DatasetError> {
        if rows.len() != labels.len() {
            return Err(DatasetError::Invalid(format!(
                "{} rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        if label_names.is_empty() {
            return Err(DatasetError::Invalid("no label names".into()));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != feature_names.len() {
                return Err(DatasetError::Invalid(format!(
                    "row {i} has {} values, expected {}",
                    row.len(),
                    feature_names.len()
                )));
            }
            if let Some(col) = row.iter().position(|v| !v.is_finite()) {
                return Err(DatasetError::Invalid(format!(
                    "row {i}, column '{}' is not finite",
                    feature_names[col]
                )));
            }
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= label_names.len()) {
            return Err(DatasetError::Invalid(format!(
                "label id {bad} out of range for {} classes",
                label_names.len()
            )));
        }
        Ok(Self {
            feature_names,
            label_names,
            rows,
            labels,
            provenance: String::new(),
        })
    }

    pub fn with_provenance(mut self, provenance: impl Into<String>) -> Self {
        self.provenance = provenance.into();
        self
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn label_names(&self) -> &[String] {
        &self.label_names
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.label_names.len()
    }

    /// Row count per label id.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.label_names.len()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Sub-table with the given row indices, in the order given.
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            feature_names: self.feature_names.clone(),
            label_names: self.label_names.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            provenance: self.provenance.clone(),
        }
    }
}
