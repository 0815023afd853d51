//! CSV and JSON ingestion. Every failure names the offending path.

use std::fs::File;
use std::path::Path;

use ndarray::Array2;

use crate::CliError;

fn open(path: &Path) -> Result<File, CliError> {
    File::open(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn reader(path: &Path, header: bool) -> Result<csv::Reader<File>, CliError> {
    Ok(csv::ReaderBuilder::new()
        .has_headers(header)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(open(path)?))
}

/// A dense numeric matrix, one CSV record per row.
pub fn read_matrix(path: &Path, header: bool) -> Result<Array2<f64>, CliError> {
    let mut rows = 0;
    let mut cols = None;
    let mut data = Vec::new();
    for record in reader(path, header)?.records() {
        let record = record.map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let line = record.position().map_or(0, |p| p.line());
        match cols {
            None => cols = Some(record.len()),
            Some(c) if c != record.len() => {
                return Err(CliError::Input(format!(
                    "{}:{line}: expected {c} fields, found {}",
                    path.display(),
                    record.len()
                )))
            }
            Some(_) => {}
        }
        for (col, field) in record.iter().enumerate() {
            let x: f64 = field.parse().map_err(|_| {
                CliError::Input(format!("{}:{line}: field {} is not a number: {field:?}", path.display(), col + 1))
            })?;
            if !x.is_finite() {
                return Err(CliError::Input(format!(
                    "{}:{line}: field {} is not finite",
                    path.display(),
                    col + 1
                )));
            }
            data.push(x);
        }
        rows += 1;
    }
    let cols = cols.unwrap_or(0);
    if rows == 0 || cols == 0 {
        return Err(CliError::Input(format!("{}: no data", path.display())));
    }
    Ok(Array2::from_shape_vec((rows, cols), data).expect("rows x cols values"))
}

/// Non-negative integer labels; records may hold one or several labels.
pub fn read_labels(path: &Path, header: bool) -> Result<Vec<usize>, CliError> {
    let mut labels = Vec::new();
    let mut rdr = reader(path, header)?;
    for record in rdr.records() {
        let record = record.map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let line = record.position().map_or(0, |p| p.line());
        for field in record.iter().filter(|f| !f.is_empty()) {
            labels.push(field.parse().map_err(|_| {
                CliError::Input(format!("{}:{line}: not a label: {field:?}", path.display()))
            })?);
        }
    }
    if labels.is_empty() {
        return Err(CliError::Input(format!("{}: no labels", path.display())));
    }
    Ok(labels)
}

/// A JSON array of labels, or an object holding one under `labels`.
pub fn read_json_labels(path: &Path) -> Result<Vec<usize>, CliError> {
    let value: serde_json::Value = serde_json::from_reader(std::io::BufReader::new(open(path)?))
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let array = match &value {
        serde_json::Value::Object(map) => map.get("labels").cloned(),
        serde_json::Value::Array(_) => Some(value.clone()),
        _ => None,
    }
    .ok_or_else(|| CliError::Input(format!("{}: no `labels` array", path.display())))?;
    serde_json::from_value(array)
        .map_err(|e| CliError::Input(format!("{}: labels must be non-negative integers: {e}", path.display())))
}
