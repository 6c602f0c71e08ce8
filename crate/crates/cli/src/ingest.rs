//! Numeric CSV ingestion with header auto-detection.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use csv::{ReaderBuilder, StringRecord, Trim};
use nalgebra::DMatrix;

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },

    #[error("line {line}, column {column}: cannot parse {field:?} as a number")]
    Parse { line: u64, column: usize, field: String },

    #[error("line {line}: {found} fields where {expected} were expected")]
    RaggedRows { line: u64, found: usize, expected: usize },

    #[error("line {line}, column {column}: value {field:?} is not finite")]
    NonFinite { line: u64, column: usize, field: String },

    #[error("line {line}: malformed CSV: {message}")]
    Malformed { line: u64, message: String },

    #[error("no data rows")]
    Empty,
}

impl IngestError {
    pub fn kind(&self) -> &'static str {
        match self {
            IngestError::Io { .. } => "io",
            IngestError::Parse { .. } => "parse-error",
            IngestError::RaggedRows { .. } => "ragged-rows",
            IngestError::NonFinite { .. } => "non-finite",
            IngestError::Malformed { .. } => "parse-error",
            IngestError::Empty => "empty-input",
        }
    }
}

pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>, IngestError> {
    let file = File::open(path).map_err(|source| IngestError::Io { path: path.display().to_string(), source })?;
    parse_matrix(file)
}

/// Rows of comma-separated decimals. A first line with any non-numeric field
/// is a header and is skipped; blank lines are ignored.
pub fn parse_matrix<R: Read>(reader: R) -> Result<DMatrix<f64>, IngestError> {
    let mut rdr = ReaderBuilder::new().has_headers(false).flexible(true).trim(Trim::All).from_reader(reader);
    let mut values = Vec::new();
    let mut width = None;
    let mut rows = 0usize;
    for (i, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| IngestError::Malformed {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(i as u64 + 1, |p| p.line());
        if i == 0 && is_header(&record) {
            continue;
        }
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(IngestError::RaggedRows { line, found: record.len(), expected });
        }
        for (c, field) in record.iter().enumerate() {
            let column = c + 1;
            let v: f64 = field.parse().map_err(|_| IngestError::Parse { line, column, field: field.to_string() })?;
            if !v.is_finite() {
                return Err(IngestError::NonFinite { line, column, field: field.to_string() });
            }
            values.push(v);
        }
        rows += 1;
    }
    match width {
        Some(p) if rows > 0 && p > 0 => Ok(DMatrix::from_row_slice(rows, p, &values)),
        _ => Err(IngestError::Empty),
    }
}

fn is_header(record: &StringRecord) -> bool {
    record.iter().any(|f| f.parse::<f64>().is_err())
}
