//! Plain-text matrix format shared by every subcommand.
//!
//! ```text
//! 3
//! 1.0000000000000000e0,0.0000000000000000e0,0.0000000000000000e0
//! ...
//! ```
//!
//! First line is `n`; then `n` rows of `n` comma-separated decimals. Values are
//! written with 17 significant digits so they round-trip exactly.

use std::path::Path;

use nalgebra::DMatrix;

use crate::{LabError, Result};

pub fn format_matrix(m: &DMatrix<f64>) -> Result<String> {
    if m.nrows() != m.ncols() {
        return Err(LabError::Dimension(format!(
            "matrix text format holds square matrices, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let n = m.nrows();
    let mut out = format!("{n}\n");
    for i in 0..n {
        let row: Vec<String> = (0..n).map(|j| format!("{:.16e}", m[(i, j)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    Ok(out)
}

pub fn parse_matrix(text: &str) -> Result<DMatrix<f64>> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let header = lines
        .next()
        .ok_or_else(|| LabError::Parse("empty matrix file".into()))?;
    let n: usize = header
        .parse()
        .map_err(|_| LabError::Parse(format!("first line must be the dimension, got '{header}'")))?;
    if n == 0 {
        return Err(LabError::Parse("dimension must be positive".into()));
    }
    let mut data = Vec::with_capacity(n * n);
    for row in 0..n {
        let line = lines
            .next()
            .ok_or_else(|| LabError::Parse(format!("expected {n} rows, found {row}")))?;
        let before = data.len();
        for field in line.split(',') {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| LabError::Parse(format!("row {}: bad value '{}'", row + 1, field.trim())))?;
            data.push(v);
        }
        if data.len() - before != n {
            return Err(LabError::Parse(format!(
                "row {} has {} values, expected {n}",
                row + 1,
                data.len() - before
            )));
        }
    }
    if lines.next().is_some() {
        return Err(LabError::Parse(format!("more than {n} rows")));
    }
    Ok(DMatrix::from_row_slice(n, n, &data))
}

pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| LabError::Io(format!("{}: {e}", path.display())))?;
    parse_matrix(&text)
}
