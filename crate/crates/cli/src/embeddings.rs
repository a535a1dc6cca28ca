//! Embedding CSV files: one row per sample, one column per dimension.

use std::path::Path;

use becr_core::linalg::EmbeddingBatch;

#[derive(Debug, thiserror::Error)]
pub enum CsvError {
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}, column {column}: cannot parse {value:?} as a number")]
    NotANumber { line: u64, column: usize, value: String },
    #[error("line {line}, column {column}: value {value:?} is not finite")]
    NonFinite { line: u64, column: usize, value: String },
    #[error("line {line}: expected {expected} columns, found {found}")]
    Ragged { line: u64, expected: usize, found: usize },
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error("no data rows")]
    Empty,
    #[error("{0}")]
    Shape(String),
}

/// Reads an embedding CSV from disk. With `header`, the first line is skipped.
pub fn read_embeddings(path: impl AsRef<Path>, header: bool) -> Result<EmbeddingBatch, CsvError> {
    let file = std::fs::File::open(path)?;
    parse_embeddings(file, header)
}

pub fn parse_embeddings<R: std::io::Read>(source: R, header: bool) -> Result<EmbeddingBatch, CsvError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let mut data = Vec::new();
    let mut width = None;
    let mut rows = 0;
    for record in reader.records() {
        let record = record.map_err(|e| CsvError::Malformed {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(CsvError::Ragged {
                line,
                expected,
                found: record.len(),
            });
        }
        for (j, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| CsvError::NotANumber {
                line,
                column: j + 1,
                value: cell.to_string(),
            })?;
            if !v.is_finite() {
                return Err(CsvError::NonFinite {
                    line,
                    column: j + 1,
                    value: cell.to_string(),
                });
            }
            data.push(v);
        }
        rows += 1;
    }
    let dim = width.ok_or(CsvError::Empty)?;
    EmbeddingBatch::from_vec(rows, dim, data).map_err(|e| CsvError::Shape(e.to_string()))
}

/// Writes a batch as headerless CSV with round-trip float formatting.
pub fn write_embeddings<W: std::io::Write>(batch: &EmbeddingBatch, sink: W) -> std::io::Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(sink);
    for row in batch.matrix().row_iter() {
        w.write_record(row.iter().map(|v| v.to_string()))
            .map_err(std::io::Error::other)?;
    }
    w.flush()
}
