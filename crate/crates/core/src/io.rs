//! Plain numeric CSV matrices.

use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Parses a rectangular numeric CSV. A first row with any non-numeric cell is
/// taken as a header; lines starting with `#` are skipped.
pub fn parse_matrix(name: &str, text: &str) -> Result<DMatrix<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        if i == 0 && record.iter().any(|c| c.parse::<f64>().is_err()) {
            continue;
        }
        let row = record
            .iter()
            .enumerate()
            .map(|(j, cell)| match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(Error::Parse {
                    path: name.to_string(),
                    row: i + 1,
                    column: j + 1,
                    message: format!("{cell:?} is not a finite number"),
                }),
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    let Some(first) = rows.first() else {
        return Err(Error::Data(format!("{name}: no numeric rows")));
    };
    let ncols = first.len();
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    parse_matrix(&path.display().to_string(), &text)
}

/// A single-column CSV (or a single row) as a vector.
pub fn read_vector(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let path = path.as_ref();
    let m = read_matrix(path)?;
    if m.ncols() != 1 && m.nrows() != 1 {
        return Err(Error::Dimension(format!(
            "{}: expected one column, found {}x{}",
            path.display(),
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m.iter().copied().collect())
}
