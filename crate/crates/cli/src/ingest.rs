//! CSV ingestion.

use std::path::Path;

use dedact::{DataMatrix, Matrix, TargetVector};

use crate::error::{CliError, Result};

/// Reads a headered CSV; the target column is split off and the remaining
/// columns keep their header order. Positions in errors are 1-based, the
/// header being row 1.
pub fn ingest_csv(path: &Path, target_column: &str) -> Result<(DataMatrix<f64>, TargetVector<f64>)> {
    let bytes = std::fs::read(path).map_err(CliError::io(path))?;
    parse_csv(&bytes, target_column)
}

pub fn parse_csv(bytes: &[u8], target_column: &str) -> Result<(DataMatrix<f64>, TargetVector<f64>)> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).from_reader(bytes);
    let mut records = reader.records();
    let header = match records.next() {
        Some(r) => r.map_err(|e| parse_error(1, 0, e.to_string()))?,
        None => return Err(parse_error(1, 0, "no header".into())),
    };
    let names: Vec<String> = header.iter().map(|s| s.trim().to_string()).collect();
    if names.iter().all(|n| n.is_empty()) {
        return Err(parse_error(1, 0, "no header".into()));
    }
    let t = names.iter().position(|n| n == target_column).ok_or_else(|| CliError::MissingTarget(target_column.into()))?;
    let width = names.len();
    let mut values = Vec::new();
    let mut target = Vec::new();
    let mut n = 0;
    for (i, rec) in records.enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| parse_error(row, 0, e.to_string()))?;
        if rec.len() != width {
            return Err(parse_error(row, 0, format!("expected {width} fields, found {}", rec.len())));
        }
        for (j, cell) in rec.iter().enumerate() {
            let v: f64 = cell
                .trim()
                .parse()
                .map_err(|_| parse_error(row, j + 1, format!("'{cell}' is not a number")))?;
            if !v.is_finite() {
                return Err(parse_error(row, j + 1, format!("'{cell}' is not finite")));
            }
            if j == t {
                target.push(v);
            } else {
                values.push(v);
            }
        }
        n += 1;
    }
    let mut cols = names;
    cols.remove(t);
    let m = Matrix::from_vec(n, width - 1, values).map_err(CliError::block("data"))?;
    Ok((
        DataMatrix::new(m, cols).map_err(CliError::block("data"))?,
        TargetVector::new(target).map_err(CliError::block("data"))?,
    ))
}

fn parse_error(row: usize, column: usize, message: String) -> CliError {
    CliError::Parse { row, column, message }
}
