//! CSV ingestion and emission.
//!
//! The accepted format is deliberately small: comma-separated numeric
//! cells, `.` decimal point, optional single header row (detected when any
//! first-row cell fails to parse as a number), no index column. Rows are
//! samples, columns are dimensions. All written numbers carry 17
//! significant digits so byte-level determinism checks are meaningful.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use maxdcor::DataMatrix;

/// A CSV-level failure with its position, separate from statistical errors
/// so the CLI can map it to the usage exit code.
#[derive(Debug)]
pub struct CsvError {
    pub path: String,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for CsvError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "{}: {}", self.path, self.message)
        } else {
            write!(
                f,
                "{}:{}:{}: {}",
                self.path, self.line, self.column, self.message
            )
        }
    }
}

fn err(path: &Path, line: usize, column: usize, message: impl Into<String>) -> CsvError {
    CsvError {
        path: path.display().to_string(),
        line,
        column,
        message: message.into(),
    }
}

/// Read a numeric table. Returns the matrix with rows as samples.
pub fn read_matrix(path: &Path) -> Result<DataMatrix, CsvError> {
    let raw = fs::read_to_string(path)
        .map_err(|e| err(path, 0, 0, format!("cannot read file: {e}")))?;

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width: Option<usize> = None;
    let mut first_data_line = 0usize;

    for (idx, line) in raw.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = line.trim_end_matches('\r');
        if trimmed.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = trimmed.split(',').collect();
        if let Some(w) = width {
            if cells.len() != w {
                return Err(err(
                    path,
                    line_no,
                    1,
                    format!("expected {w} columns, found {}", cells.len()),
                ));
            }
        }

        let mut parsed = Vec::with_capacity(cells.len());
        let mut failed_at: Option<(usize, String)> = None;
        for (c, cell) in cells.iter().enumerate() {
            match cell.trim().parse::<f64>() {
                Ok(v) if v.is_finite() => parsed.push(v),
                Ok(v) => {
                    failed_at = Some((c + 1, format!("non-finite value {v}")));
                    break;
                }
                Err(_) => {
                    failed_at = Some((c + 1, format!("cannot parse {:?} as a number", cell.trim())));
                    break;
                }
            }
        }

        match failed_at {
            None => {
                if width.is_none() {
                    width = Some(cells.len());
                    first_data_line = line_no;
                }
                rows.push(parsed);
            }
            Some((col, message)) => {
                // A single header row is allowed; anything else is an error.
                if rows.is_empty() && width.is_none() && first_data_line == 0 && line_no == header_candidate(&raw) {
                    width = None;
                    continue;
                }
                return Err(err(path, line_no, col, message));
            }
        }
    }

    if rows.is_empty() {
        return Err(err(path, 0, 0, "no data rows"));
    }
    DataMatrix::from_rows(&rows)
        .map_err(|e| err(path, first_data_line, 1, format!("invalid table: {e}")))
}

/// Line number of the first non-empty line (the only line allowed to be a
/// header).
fn header_candidate(raw: &str) -> usize {
    for (idx, line) in raw.lines().enumerate() {
        if !line.trim().is_empty() {
            return idx + 1;
        }
    }
    0
}

/// Format a float with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Write a row-major value grid as bare CSV (no header).
pub fn write_grid(path: &Path, values: &[f64], rows: usize, cols: usize) -> std::io::Result<()> {
    let mut out = String::with_capacity(rows * cols * 24);
    for r in 0..rows {
        for c in 0..cols {
            if c > 0 {
                out.push(',');
            }
            out.push_str(&fmt_f64(values[r * cols + c]));
        }
        out.push('\n');
    }
    let mut file = fs::File::create(path)?;
    file.write_all(out.as_bytes())
}
