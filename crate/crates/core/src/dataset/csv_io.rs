use std::collections::BTreeSet;
use std::io::{Read, Write};
use std::path::Path;

use super::{DatasetError, LabeledTable};

/// Which columns of a CSV file hold what.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvSchema {
    pub label_column: String,
    /// Class names in id order. Label cells may be a name or an integer id.
    /// Without names, integer cells give `K = max id + 1` classes named
    /// `class_<id>`; otherwise the distinct cell values sorted become the
    /// class names.
    pub label_names: Option<Vec<String>>,
    /// Feature columns to read; defaults to every non-label column in header
    /// order.
    pub feature_columns: Option<Vec<String>>,
}

impl CsvSchema {
    pub fn new(label_column: impl Into<String>) -> Self {
        Self {
            label_column: label_column.into(),
            label_names: None,
            feature_columns: None,
        }
    }

    pub fn with_label_names(mut self, names: Vec<String>) -> Self {
        self.label_names = Some(names);
        self
    }

    pub fn with_feature_columns(mut self, columns: Vec<String>) -> Self {
        self.feature_columns = Some(columns);
        self
    }
}

pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<LabeledTable, DatasetError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(read_csv(file, schema)?.with_provenance(path.display().to_string()))
}

pub fn read_csv<R: Read>(reader: R, schema: &CsvSchema) -> Result<LabeledTable, DatasetError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| DatasetError::MissingColumn(name.to_string()))
    };
    let label_idx = find(&schema.label_column)?;
    let feature_names: Vec<String> = match &schema.feature_columns {
        Some(cols) => cols.clone(),
        None => headers
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != label_idx)
            .map(|(_, h)| h.clone())
            .collect(),
    };
    let feature_idx = feature_names
        .iter()
        .map(|n| find(n))
        .collect::<Result<Vec<_>, _>>()?;

    let mut rows = Vec::new();
    let mut raw_labels = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != headers.len() {
            return Err(DatasetError::RaggedRow {
                line,
                expected: headers.len(),
                found: record.len(),
            });
        }
        let row = feature_idx
            .iter()
            .zip(&feature_names)
            .map(|(&i, name)| {
                let cell = &record[i];
                match cell.parse::<f64>() {
                    Ok(v) if v.is_finite() => Ok(v),
                    _ => Err(DatasetError::NonNumeric {
                        line,
                        column: name.clone(),
                        value: cell.to_string(),
                    }),
                }
            })
            .collect::<Result<Vec<f64>, _>>()?;
        rows.push(row);
        raw_labels.push((line, record[label_idx].to_string()));
    }
    if rows.is_empty() {
        return Err(DatasetError::Empty);
    }
    let (label_names, labels) = resolve_labels(&raw_labels, schema.label_names.as_deref())?;
    LabeledTable::new(feature_names, label_names, rows, labels)
}

fn resolve_labels(
    raw: &[(u64, String)],
    names: Option<&[String]>,
) -> Result<(Vec<String>, Vec<usize>), DatasetError> {
    let bad = |line: u64, cell: &str| DatasetError::Format {
        line: line as usize,
        message: format!("unknown label '{cell}'"),
    };
    if let Some(names) = names {
        let labels = raw
            .iter()
            .map(|(line, cell)| match names.iter().position(|n| n == cell) {
                Some(id) => Ok(id),
                None => match cell.parse::<usize>() {
                    Ok(id) if id < names.len() => Ok(id),
                    _ => Err(bad(*line, cell)),
                },
            })
            .collect::<Result<Vec<_>, _>>()?;
        return Ok((names.to_vec(), labels));
    }
    let ids: Option<Vec<usize>> = raw.iter().map(|(_, c)| c.parse().ok()).collect();
    if let Some(ids) = ids {
        let k = ids.iter().max().map_or(0, |m| m + 1);
        return Ok(((0..k).map(|i| format!("class_{i}")).collect(), ids));
    }
    let distinct: BTreeSet<&str> = raw.iter().map(|(_, c)| c.as_str()).collect();
    let names: Vec<String> = distinct.into_iter().map(str::to_string).collect();
    let labels = raw
        .iter()
        .map(|(_, c)| names.iter().position(|n| n == c).expect("name collected above"))
        .collect();
    Ok((names, labels))
}

/// Write features then the label column (as class names).
pub fn write_csv(
    table: &LabeledTable,
    path: impl AsRef<Path>,
    label_column: &str,
) -> Result<(), DatasetError> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })?;
    write_csv_to(table, file, label_column)
}

pub(crate) fn write_csv_to<W: Write>(
    table: &LabeledTable,
    writer: W,
    label_column: &str,
) -> Result<(), DatasetError> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = table.feature_names().iter().map(String::as_str).collect();
    header.push(label_column);
    wtr.write_record(&header)?;
    for (row, &label) in table.rows().iter().zip(table.labels()) {
        let mut fields: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        fields.push(table.label_names()[label].clone());
        wtr.write_record(&fields)?;
    }
    wtr.flush().map_err(|source| DatasetError::Io {
        path: "<csv writer>".into(),
        source,
    })?;
    Ok(())
}
