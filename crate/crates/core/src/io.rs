//! Matrix serialization: labelled CSV and the `CSPC1` binary cache.
//!
//! Binary cache layout (all little-endian):
//!
//! | offset | size      | content                    |
//! |--------|-----------|----------------------------|
//! | 0      | 5         | magic `b"CSPC1"`           |
//! | 5      | 8         | rows as `u64`              |
//! | 13     | 8         | cols as `u64`              |
//! | 21     | 8·rows·cols | row-major `f64` values   |

use std::io::{Read, Write};

use nalgebra::DMatrix;

use crate::{Error, Result};

pub const CACHE_MAGIC: &[u8; 5] = b"CSPC1";

/// A dense matrix with row and column codes.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledMatrix {
    pub row_codes: Vec<String>,
    pub col_codes: Vec<String>,
    pub values: DMatrix<f64>,
}

/// Write a matrix as CSV: header `code,<col codes...>`, one row per row code.
/// Floats use the shortest representation that parses back to the same bits.
pub fn write_matrix_csv<W: Write>(
    w: W,
    row_codes: &[String],
    col_codes: &[String],
    values: &DMatrix<f64>,
) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = Vec::with_capacity(col_codes.len() + 1);
    header.push("code".to_string());
    header.extend(col_codes.iter().cloned());
    out.write_record(&header)?;
    for (i, code) in row_codes.iter().enumerate() {
        let mut rec = Vec::with_capacity(col_codes.len() + 1);
        rec.push(code.clone());
        for j in 0..col_codes.len() {
            rec.push(format!("{}", values[(i, j)]));
        }
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_matrix_csv<R: Read>(r: R) -> Result<LabeledMatrix> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let header = rdr.headers()?.clone();
    let col_codes: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let mut row_codes = Vec::new();
    let mut flat = Vec::new();
    for (idx, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = idx as u64 + 2;
        if rec.len() != col_codes.len() + 1 {
            return Err(Error::Parse {
                line,
                message: format!("expected {} fields, found {}", col_codes.len() + 1, rec.len()),
            });
        }
        row_codes.push(rec[0].to_string());
        for field in rec.iter().skip(1) {
            let v: f64 = field.trim().parse().map_err(|_| Error::Parse {
                line,
                message: format!("not a number: {field:?}"),
            })?;
            flat.push(v);
        }
    }
    let values = DMatrix::from_row_slice(row_codes.len(), col_codes.len(), &flat);
    Ok(LabeledMatrix { row_codes, col_codes, values })
}

pub fn write_cache<W: Write>(mut w: W, values: &DMatrix<f64>) -> Result<()> {
    w.write_all(CACHE_MAGIC)?;
    w.write_all(&(values.nrows() as u64).to_le_bytes())?;
    w.write_all(&(values.ncols() as u64).to_le_bytes())?;
    for i in 0..values.nrows() {
        for j in 0..values.ncols() {
            w.write_all(&values[(i, j)].to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_cache<R: Read>(mut r: R) -> Result<DMatrix<f64>> {
    let mut magic = [0u8; 5];
    r.read_exact(&mut magic)?;
    if &magic != CACHE_MAGIC {
        return Err(Error::Validation("bad cache magic".into()));
    }
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    let rows = u64::from_le_bytes(buf) as usize;
    r.read_exact(&mut buf)?;
    let cols = u64::from_le_bytes(buf) as usize;
    let mut flat = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        r.read_exact(&mut buf)?;
        flat.push(f64::from_le_bytes(buf));
    }
    Ok(DMatrix::from_row_slice(rows, cols, &flat))
}
