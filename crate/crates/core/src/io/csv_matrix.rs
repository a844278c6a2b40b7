//! Plain CSV matrices, one row per line, no header.

use std::fs;
use std::path::Path;

use crate::analysis::WeightMatrix;
use crate::error::{validation, Error, Result};

pub fn parse_csv_matrix(text: &str, layer_name: &str) -> Result<WeightMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row_no = i + 1;
        let record = record.map_err(|e| validation(format!("row {row_no}: {e}")))?;
        let row = record
            .iter()
            .enumerate()
            .map(|(c, field)| {
                field.parse::<f64>().map_err(|_| {
                    validation(format!(
                        "row {row_no}, column {}: {field:?} is not a number",
                        c + 1
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(validation(format!(
                    "ragged row {row_no}: {} values, expected {}",
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(validation("csv matrix is empty"));
    }
    WeightMatrix::from_rows(layer_name, &rows)
}

pub fn read_csv_matrix(path: &Path, layer_name: &str) -> Result<WeightMatrix> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv_matrix(&text, layer_name)
}
