//! MatrixMarket dense array files and benchmark CSV records.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dense::DenseMatrix;
use crate::scalar::Scalar;

pub const MATRIX_MARKET_HEADER: &str = "%%MatrixMarket matrix array real general";

/// Frozen column order of benchmark CSV files.
pub const BENCH_CSV_HEADER: &str =
    "m,n,r,rep,seed,t_scratch_ns,t_woodbury_ns,speedup,rel_forward_error";

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("malformed header: {0}")]
    MalformedHeader(String),

    #[error("declared {expected} values but found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("value #{index} is not finite")]
    NonFiniteValue { index: usize },

    #[error("line {line}: cannot parse {token:?}")]
    Parse { line: usize, token: String },

    #[error("no benchmark records to write")]
    EmptyRecords,

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Reads a dense MatrixMarket `array real general` file (column-major values).
pub fn read_matrix<T: Scalar>(path: impl AsRef<Path>) -> Result<DenseMatrix<T>, IoError> {
    parse_matrix(BufReader::new(File::open(path)?))
}

pub fn parse_matrix<T: Scalar, R: Read>(reader: R) -> Result<DenseMatrix<T>, IoError> {
    let reader = BufReader::new(reader);
    let mut lines = reader.lines().enumerate();

    let header = match lines.next() {
        Some((_, line)) => line?,
        None => return Err(IoError::MalformedHeader("empty file".into())),
    };
    let tokens: Vec<String> = header
        .split_whitespace()
        .map(|t| t.to_ascii_lowercase())
        .collect();
    if tokens != ["%%matrixmarket", "matrix", "array", "real", "general"] {
        return Err(IoError::MalformedHeader(header));
    }

    let mut dims: Option<(usize, usize)> = None;
    let mut values: Vec<f64> = Vec::new();
    for (idx, line) in lines {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        match dims {
            None => {
                let parts: Vec<&str> = trimmed.split_whitespace().collect();
                let parse = |s: &str| {
                    s.parse::<usize>().map_err(|_| IoError::Parse {
                        line: idx + 1,
                        token: s.to_string(),
                    })
                };
                if parts.len() != 2 {
                    return Err(IoError::MalformedHeader(format!(
                        "expected `rows cols` on line {}, found {trimmed:?}",
                        idx + 1
                    )));
                }
                let (rows, cols) = (parse(parts[0])?, parse(parts[1])?);
                if rows == 0 || cols == 0 {
                    return Err(IoError::MalformedHeader(format!(
                        "dimensions must be positive, found {rows}x{cols}"
                    )));
                }
                dims = Some((rows, cols));
                values.reserve(rows * cols);
            }
            Some(_) => {
                for token in trimmed.split_whitespace() {
                    let v: f64 = token.parse().map_err(|_| IoError::Parse {
                        line: idx + 1,
                        token: token.to_string(),
                    })?;
                    if !v.is_finite() {
                        return Err(IoError::NonFiniteValue {
                            index: values.len(),
                        });
                    }
                    values.push(v);
                }
            }
        }
    }
    let (rows, cols) = dims.ok_or_else(|| IoError::MalformedHeader("missing size line".into()))?;
    if values.len() != rows * cols {
        return Err(IoError::DimensionMismatch {
            expected: rows * cols,
            found: values.len(),
        });
    }
    let data = values
        .into_iter()
        .enumerate()
        .map(|(index, v)| {
            T::from_f64(v)
                .filter(|x| x.is_finite())
                .ok_or(IoError::NonFiniteValue { index })
        })
        .collect::<Result<Vec<T>, _>>()?;
    DenseMatrix::from_col_major(rows, cols, data)
        .map_err(|e| IoError::MalformedHeader(e.to_string()))
}

/// Writes `m` as a dense MatrixMarket file with 17 significant digits.
pub fn write_matrix<T: Scalar>(path: impl AsRef<Path>, m: &DenseMatrix<T>) -> Result<(), IoError> {
    let mut w = BufWriter::new(File::create(path)?);
    format_matrix(&mut w, m)?;
    w.flush()?;
    Ok(())
}

pub fn format_matrix<T: Scalar, W: Write>(w: &mut W, m: &DenseMatrix<T>) -> Result<(), IoError> {
    writeln!(w, "{MATRIX_MARKET_HEADER}")?;
    writeln!(w, "{} {}", m.rows(), m.cols())?;
    for &v in m.as_slice() {
        let v = v.to_f64().unwrap_or(f64::NAN);
        writeln!(w, "{v:.16e}")?;
    }
    Ok(())
}

/// One timed comparison between a from-scratch solve and the update path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub m: usize,
    pub n: usize,
    pub r: usize,
    pub rep: usize,
    pub seed: u64,
    pub t_scratch_ns: u64,
    pub t_woodbury_ns: u64,
    /// `t_scratch_ns / t_woodbury_ns`
    pub speedup: f64,
    /// `‖x_update − x_scratch‖₂ / ‖x_scratch‖₂`
    pub rel_forward_error: f64,
}

impl BenchRecord {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        m: usize,
        n: usize,
        r: usize,
        rep: usize,
        seed: u64,
        t_scratch_ns: u64,
        t_woodbury_ns: u64,
        rel_forward_error: f64,
    ) -> Self {
        Self {
            m,
            n,
            r,
            rep,
            seed,
            t_scratch_ns,
            t_woodbury_ns,
            speedup: t_scratch_ns as f64 / t_woodbury_ns.max(1) as f64,
            rel_forward_error,
        }
    }
}

pub fn write_bench_csv(path: impl AsRef<Path>, records: &[BenchRecord]) -> Result<(), IoError> {
    let file = File::create(path)?;
    format_bench_csv(file, records)
}

pub fn format_bench_csv<W: Write>(w: W, records: &[BenchRecord]) -> Result<(), IoError> {
    if records.is_empty() {
        return Err(IoError::EmptyRecords);
    }
    let mut writer = csv::Writer::from_writer(w);
    for rec in records {
        writer.serialize(rec)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_bench_csv(path: impl AsRef<Path>) -> Result<Vec<BenchRecord>, IoError> {
    parse_bench_csv(File::open(path)?)
}

/// Parses a benchmark CSV, insisting on the exact header.
pub fn parse_bench_csv<R: Read>(r: R) -> Result<Vec<BenchRecord>, IoError> {
    let mut reader = csv::Reader::from_reader(r);
    let header = reader.headers()?.iter().collect::<Vec<_>>().join(",");
    if header != BENCH_CSV_HEADER {
        return Err(IoError::MalformedHeader(header));
    }
    reader
        .deserialize()
        .map(|rec| rec.map_err(IoError::from))
        .collect()
}
