//! CSV emission and parsing for trajectory records.
//!
//! The column set and order are frozen; golden-file tests depend on them.
//! Floats are written in Rust's shortest round-trip decimal form, so parsing
//! a file recovers every value bit-exactly, and the files are portable
//! across platforms that agree on IEEE 754 binary64.

use std::io::{self, Write};
use thermotop_core::diagnostics::TrajectoryRecord;
use thiserror::Error;

/// Fixed header, exact column order.
pub const HEADER: &str = "step,t,omega_x,omega_y,omega_z,gamma_x,gamma_y,gamma_z,S,T,e_kin,e_pot,e_int,e_total,kn_I,pi_norm,gamma_norm,com_x,com_y,com_z,newton_iters,residual_norm";

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("malformed CSV at line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("column `{0}` not present in the header")]
    MissingColumn(String),
}

/// Shortest decimal form that parses back to the identical bit pattern.
pub fn format_value(x: f64) -> String {
    format!("{x}")
}

fn opt(x: Option<f64>) -> String {
    x.map(format_value).unwrap_or_default()
}

/// One data line in the frozen column order; no trailing newline.
pub fn record_line(r: &TrajectoryRecord) -> String {
    let com = r.com.map(|c| (c.x, c.y, c.z));
    [
        r.step.to_string(),
        format_value(r.t),
        format_value(r.omega.x),
        format_value(r.omega.y),
        format_value(r.omega.z),
        format_value(r.gamma.x),
        format_value(r.gamma.y),
        format_value(r.gamma.z),
        format_value(r.entropy),
        format_value(r.temperature),
        format_value(r.e_kin),
        format_value(r.e_pot),
        format_value(r.e_int),
        format_value(r.e_total),
        opt(r.kn_value),
        format_value(r.pi_norm),
        format_value(r.gamma_norm),
        opt(com.map(|c| c.0)),
        opt(com.map(|c| c.1)),
        opt(com.map(|c| c.2)),
        r.newton_iterations
            .map(|n| n.to_string())
            .unwrap_or_default(),
        opt(r.residual_norm),
    ]
    .join(",")
}

/// Writes the header and one line per record.
pub fn write_records<W: Write>(mut w: W, records: &[TrajectoryRecord]) -> io::Result<()> {
    writeln!(w, "{HEADER}")?;
    for r in records {
        writeln!(w, "{}", record_line(r))?;
    }
    Ok(())
}

/// A parsed CSV: column names plus rows of optional numbers (empty cells
/// parse as `None`).
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
}

impl Table {
    pub fn column_index(&self, name: &str) -> Result<usize, CsvError> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| CsvError::MissingColumn(name.to_string()))
    }

    /// All values of one column, in row order.
    pub fn column(&self, name: &str) -> Result<Vec<Option<f64>>, CsvError> {
        let idx = self.column_index(name)?;
        Ok(self.rows.iter().map(|row| row[idx]).collect())
    }
}

/// Parses a CSV document with a header row. Every row must have exactly as
/// many cells as the header; cells must be empty or parse as floats.
pub fn parse(text: &str) -> Result<Table, CsvError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(CsvError::Malformed {
        line: 1,
        message: "missing header row".to_string(),
    })?;
    let columns: Vec<String> = header.split(',').map(str::to_string).collect();
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != columns.len() {
            return Err(CsvError::Malformed {
                line: i + 1,
                message: format!("expected {} cells, found {}", columns.len(), cells.len()),
            });
        }
        let mut row = Vec::with_capacity(cells.len());
        for cell in cells {
            if cell.is_empty() {
                row.push(None);
            } else {
                let value = cell.parse::<f64>().map_err(|_| CsvError::Malformed {
                    line: i + 1,
                    message: format!("cell `{cell}` is not a number"),
                })?;
                row.push(Some(value));
            }
        }
        rows.push(row);
    }
    Ok(Table { columns, rows })
}
