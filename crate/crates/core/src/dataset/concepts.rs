//! Precomputed concept activations.
//!
//! Text format, one record per line:
//!
//! ```text
//! # free comment
//! #concepts: pigment_network,dots_globules,regression_structures
//! #labels: nevus,melanoma
//! img_0001,0,0.12,-1.3,2.0
//! ```
//!
//! `#concepts:` is required and must precede the data. `#labels:` is optional;
//! without it the class count is `max label id + 1` and the classes are named
//! `class_<id>`. Any other line starting with `#` is a comment.

use std::io::Write;
use std::path::Path;

use super::{DatasetError, LabeledTable};
use crate::model::{Assumption, GaussianEvidenceModel, WoeError};

#[derive(Debug, Clone, PartialEq)]
pub struct ConceptActivationTable {
    concept_names: Vec<String>,
    label_names: Vec<String>,
    instance_ids: Vec<String>,
    rows: Vec<Vec<f64>>,
    labels: Vec<usize>,
}

impl ConceptActivationTable {
    /// Concept evidence is computed with the full covariance.
    pub const ASSUMPTION: Assumption = Assumption::Dependent;

    pub fn new(
        concept_names: Vec<String>,
        label_names: Vec<String>,
        instance_ids: Vec<String>,
        rows: Vec<Vec<f64>>,
        labels: Vec<usize>,
    ) -> Result<Self, DatasetError> {
        if concept_names.is_empty() {
            return Err(DatasetError::Invalid("no concepts".into()));
        }
        if instance_ids.len() != rows.len() {
            return Err(DatasetError::Invalid("instance id count differs from row count".into()));
        }
        // Reuse the tabular checks for shape, finiteness and label range.
        LabeledTable::new(concept_names.clone(), label_names.clone(), rows.clone(), labels.clone())?;
        Ok(Self {
            concept_names,
            label_names,
            instance_ids,
            rows,
            labels,
        })
    }

    pub fn concept_names(&self) -> &[String] {
        &self.concept_names
    }

    pub fn num_concepts(&self) -> usize {
        self.concept_names.len()
    }

    pub fn label_names(&self) -> &[String] {
        &self.label_names
    }

    pub fn num_classes(&self) -> usize {
        self.label_names.len()
    }

    pub fn instance_ids(&self) -> &[String] {
        &self.instance_ids
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// View as a feature table whose columns are the concepts.
    pub fn to_table(&self) -> LabeledTable {
        LabeledTable::new(
            self.concept_names.clone(),
            self.label_names.clone(),
            self.rows.clone(),
            self.labels.clone(),
        )
        .expect("validated at construction")
    }

    /// Fit a WoE model over the concepts with [`Self::ASSUMPTION`].
    pub fn fit_model(&self, ridge: f64) -> Result<GaussianEvidenceModel, WoeError> {
        GaussianEvidenceModel::fit(&self.to_table(), Self::ASSUMPTION, ridge)
    }
}

pub fn load_concepts(path: impl AsRef<Path>) -> Result<ConceptActivationTable, DatasetError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_concepts(&text)
}

fn split_names(rest: &str) -> Vec<String> {
    rest.split(',').map(|s| s.trim().to_string()).collect()
}

pub fn parse_concepts(text: &str) -> Result<ConceptActivationTable, DatasetError> {
    let mut concepts: Option<Vec<String>> = None;
    let mut label_names: Option<Vec<String>> = None;
    let mut ids = Vec::new();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut label_lines = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let fail = |message: String| DatasetError::Format {
            line: line_no,
            message,
        };
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let rest = rest.trim_start();
            if let Some(names) = rest.strip_prefix("concepts:") {
                if concepts.is_some() {
                    return Err(fail("duplicate #concepts header".into()));
                }
                if !rows.is_empty() {
                    return Err(fail("#concepts header after data".into()));
                }
                let names = split_names(names);
                if names.iter().any(String::is_empty) {
                    return Err(fail("empty concept name".into()));
                }
                concepts = Some(names);
            } else if let Some(names) = rest.strip_prefix("labels:") {
                let names = split_names(names);
                if names.iter().any(String::is_empty) {
                    return Err(fail("empty label name".into()));
                }
                label_names = Some(names);
            }
            continue;
        }
        let Some(names) = &concepts else {
            return Err(fail("data line before #concepts header".into()));
        };
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != names.len() + 2 {
            return Err(fail(format!(
                "expected {} fields (id, label, {} activations), found {}",
                names.len() + 2,
                names.len(),
                fields.len()
            )));
        }
        let label: usize = fields[1]
            .parse()
            .map_err(|_| fail(format!("label id '{}' is not a non-negative integer", fields[1])))?;
        let row = fields[2..]
            .iter()
            .enumerate()
            .map(|(j, f)| match f.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(fail(format!("activation '{f}' for concept '{}' is not a finite number", names[j]))),
            })
            .collect::<Result<Vec<f64>, _>>()?;
        ids.push(fields[0].to_string());
        rows.push(row);
        labels.push(label);
        label_lines.push(line_no);
    }

    let Some(concepts) = concepts else {
        return Err(DatasetError::Format {
            line: 0,
            message: "missing #concepts header".into(),
        });
    };
    if rows.is_empty() {
        return Err(DatasetError::Empty);
    }
    let label_names = match label_names {
        Some(names) => {
            if let Some(pos) = labels.iter().position(|&l| l >= names.len()) {
                return Err(DatasetError::Format {
                    line: label_lines[pos],
                    message: format!("label id {} out of range for {} labels", labels[pos], names.len()),
                });
            }
            names
        }
        None => {
            let k = labels.iter().max().map_or(0, |m| m + 1);
            (0..k).map(|i| format!("class_{i}")).collect()
        }
    };
    ConceptActivationTable::new(concepts, label_names, ids, rows, labels)
}

pub fn write_concepts<W: Write>(table: &ConceptActivationTable, mut out: W) -> std::io::Result<()> {
    writeln!(out, "#concepts: {}", table.concept_names.join(","))?;
    writeln!(out, "#labels: {}", table.label_names.join(","))?;
    for ((id, row), label) in table.instance_ids.iter().zip(&table.rows).zip(&table.labels) {
        write!(out, "{id},{label}")?;
        for v in row {
            write!(out, ",{v}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_header_comments_and_rows() {
        let text = "# exported activations\n#concepts: a, b\n\nimg1,1,0.5,-2\n# trailing note\nimg2,0,1e-3,4\n";
        let t = parse_concepts(text).unwrap();
        assert_eq!(t.concept_names(), &["a", "b"]);
        assert_eq!(t.num_classes(), 2);
        assert_eq!(t.instance_ids(), &["img1", "img2"]);
        assert_eq!(t.rows()[0], vec![0.5, -2.0]);
        assert_eq!(t.labels(), &[1, 0]);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = parse_concepts("#concepts: a,b\nx,0,1\n").unwrap_err();
        assert!(matches!(err, DatasetError::Format { line: 2, .. }), "{err}");
        let err = parse_concepts("#concepts: a\nx,0,1\ny,z,2\n").unwrap_err();
        assert!(matches!(err, DatasetError::Format { line: 3, .. }), "{err}");
        let err = parse_concepts("#concepts: a\nx,0,inf\n").unwrap_err();
        assert!(matches!(err, DatasetError::Format { line: 2, .. }), "{err}");
        let err = parse_concepts("x,0,1\n").unwrap_err();
        assert!(matches!(err, DatasetError::Format { line: 1, .. }), "{err}");
        let err = parse_concepts("#concepts: a\n#labels: p\nx,1,1\n").unwrap_err();
        assert!(matches!(err, DatasetError::Format { line: 3, .. }), "{err}");
    }

    #[test]
    fn empty_activation_file() {
        assert!(matches!(parse_concepts("#concepts: a,b\n"), Err(DatasetError::Empty)));
        assert!(matches!(parse_concepts(""), Err(DatasetError::Format { .. })));
    }

    #[test]
    fn concept_models_default_to_full_covariance() {
        let t = parse_concepts("#concepts: a\nx,0,1\ny,0,2\nz,1,5\nw,1,7\n").unwrap();
        assert_eq!(t.fit_model(1e-6).unwrap().assumption(), Assumption::Dependent);
    }
}
