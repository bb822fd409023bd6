//! Plain-text matrix files.
//!
//! The format is a header line `rows cols` followed by the entries in row
//! order, whitespace separated, written with 17 significant digits so that
//! a write/read round trip reproduces every `f64` bit for bit.

use crate::{GrassmannError, Result};
use nalgebra::DMatrix;
use std::fmt::Write as _;
use std::path::Path;

/// Parses a matrix from the text format.
pub fn parse_matrix(text: &str) -> Result<DMatrix<f64>> {
    let mut tokens = text.split_whitespace();
    let rows = parse_dim(tokens.next(), "rows")?;
    let cols = parse_dim(tokens.next(), "cols")?;
    let expected = rows
        .checked_mul(cols)
        .ok_or_else(|| GrassmannError::ParseMatrix("matrix dimensions overflow".into()))?;

    let mut values = Vec::with_capacity(expected);
    for token in tokens.by_ref() {
        if values.len() == expected {
            return Err(GrassmannError::ParseMatrix(format!(
                "expected {expected} entries but found extra token {token:?}"
            )));
        }
        let v: f64 = token.parse().map_err(|_| {
            GrassmannError::ParseMatrix(format!(
                "entry {} ({token:?}) is not a number",
                values.len()
            ))
        })?;
        values.push(v);
    }
    if values.len() != expected {
        return Err(GrassmannError::ParseMatrix(format!(
            "expected {expected} entries for a {rows}x{cols} matrix, found {}",
            values.len()
        )));
    }
    Ok(DMatrix::from_row_slice(rows, cols, &values))
}

fn parse_dim(token: Option<&str>, what: &str) -> Result<usize> {
    let token =
        token.ok_or_else(|| GrassmannError::ParseMatrix(format!("missing {what} in header")))?;
    token.parse().map_err(|_| {
        GrassmannError::ParseMatrix(format!("{what} ({token:?}) is not a nonnegative integer"))
    })
}

/// Formats a matrix in the text format.
pub fn format_matrix(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} {}", m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if j > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{:.16e}", m[(i, j)]);
        }
        out.push('\n');
    }
    out
}

/// Reads a matrix file.
pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    let text = std::fs::read_to_string(path)?;
    parse_matrix(&text)
}

/// Writes a matrix file.
pub fn write_matrix(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    std::fs::write(path, format_matrix(m))?;
    Ok(())
}
