use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{KppcaError, Result};

/// Reads a numeric table with one sample per row and returns it as a
/// `d×N` matrix (samples as columns). A first row containing any
/// non-numeric field is treated as a header and skipped.
pub fn load_csv(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| KppcaError::io(path, e))?;
    parse_csv(&text)
}

pub fn parse_csv(text: &str) -> Result<DMatrix<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (idx, record) in reader.records().enumerate() {
        let line = idx + 1;
        let record = record.map_err(|e| KppcaError::Parse {
            row: line,
            column: 0,
            message: e.to_string(),
        })?;
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, usize> = record
            .iter()
            .enumerate()
            .map(|(c, field)| field.parse::<f64>().map_err(|_| c))
            .collect();
        let values = match parsed {
            Ok(v) => v,
            Err(_) if idx == 0 => {
                width = Some(record.len());
                continue;
            }
            Err(c) => {
                return Err(KppcaError::Parse {
                    row: line,
                    column: c + 1,
                    message: format!("not a number: {:?}", &record[c]),
                })
            }
        };
        if let Some(c) = values.iter().position(|v| !v.is_finite()) {
            return Err(KppcaError::Parse {
                row: line,
                column: c + 1,
                message: "non-finite value".into(),
            });
        }
        match width {
            None => width = Some(values.len()),
            Some(w) if w != values.len() => {
                return Err(KppcaError::RaggedRows {
                    row: line,
                    expected: w,
                    found: values.len(),
                })
            }
            _ => {}
        }
        rows.push(values);
    }

    if rows.is_empty() {
        return Err(KppcaError::Parse {
            row: 1,
            column: 1,
            message: "no numeric rows".into(),
        });
    }
    let d = rows[0].len();
    Ok(DMatrix::from_fn(d, rows.len(), |i, j| rows[j][i]))
}

/// Writes a `d×N` matrix as CSV, one sample per row, under `header`.
/// Floats use the shortest representation that round-trips exactly.
pub fn write_csv<W: Write>(out: W, header: &[String], samples: &DMatrix<f64>) -> Result<()> {
    if header.len() != samples.nrows() {
        return Err(KppcaError::DimensionMismatch {
            expected: samples.nrows(),
            found: header.len(),
        });
    }
    let mut writer = csv::Writer::from_writer(out);
    let to_err = |e: csv::Error| KppcaError::io("<csv>", std::io::Error::other(e));
    writer.write_record(header).map_err(to_err)?;
    for col in samples.column_iter() {
        writer
            .write_record(col.iter().map(|v| v.to_string()))
            .map_err(to_err)?;
    }
    writer.flush().map_err(|e| KppcaError::io("<csv>", e))
}

pub fn save_csv(path: impl AsRef<Path>, header: &[String], samples: &DMatrix<f64>) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    write_csv(&mut buf, header, samples)?;
    fs::write(path, buf).map_err(|e| KppcaError::io(path, e))
}
