//! Observation matrices, CSV loading and column standardization.

use std::io::{Read, Write};

use crate::error::{Error, Result};

/// An `n x p` matrix of observations: rows are samples, columns variables.
///
/// Storage is column-major because every statistic in the crate works on
/// whole columns.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    n: usize,
    p: usize,
    values: Vec<f64>,
}

impl DataMatrix {
    /// Builds a matrix from `p` columns of length `n` stored back to back.
    pub fn from_columns(n: usize, p: usize, values: Vec<f64>) -> Result<Self> {
        if n < 2 || p < 2 {
            return Err(Error::TooSmall { n, p });
        }
        if values.len() != n * p {
            return Err(Error::invalid(
                "values",
                format!(
                    "expected {} entries for a {n}x{p} matrix, got {}",
                    n * p,
                    values.len()
                ),
            ));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos % n + 1,
                column: pos / n + 1,
            });
        }
        Ok(Self { n, p, values })
    }

    /// Builds a matrix from observation rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        for (k, row) in rows.iter().enumerate() {
            if row.len() != p {
                return Err(Error::RaggedRow {
                    row: k + 1,
                    expected: p,
                    found: row.len(),
                });
            }
        }
        let mut values = vec![0.0; n * p];
        for (k, row) in rows.iter().enumerate() {
            for (i, &v) in row.iter().enumerate() {
                values[i * n + k] = v;
            }
        }
        Self::from_columns(n, p, values)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Entry for observation `k`, variable `i` (both zero-based).
    pub fn get(&self, k: usize, i: usize) -> f64 {
        self.values[i * self.n + k]
    }

    pub fn column(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.n)
    }

    /// Observation `k` as an owned row.
    pub fn row(&self, k: usize) -> Vec<f64> {
        (0..self.p).map(|i| self.get(k, i)).collect()
    }

    /// Applies `f` to every column, returning a new matrix.
    pub fn map_columns<F>(&self, mut f: F) -> Result<Self>
    where
        F: FnMut(usize, &[f64], &mut [f64]),
    {
        let mut out = vec![0.0; self.values.len()];
        for (i, (src, dst)) in self
            .values
            .chunks_exact(self.n)
            .zip(out.chunks_exact_mut(self.n))
            .enumerate()
        {
            f(i, src, dst);
        }
        Self::from_columns(self.n, self.p, out)
    }

    /// Reorders the observations: row `k` of the result is row `order[k]`.
    pub fn permute_rows(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.n {
            return Err(Error::invalid("order", "length must equal n"));
        }
        self.map_columns(|_, src, dst| {
            for (d, &k) in dst.iter_mut().zip(order) {
                *d = src[k];
            }
        })
    }

    /// Writes the matrix as headerless CSV, rows = observations, using the
    /// shortest representation that round-trips each value exactly.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let mut line = String::new();
        for k in 0..self.n {
            line.clear();
            for i in 0..self.p {
                if i > 0 {
                    line.push(',');
                }
                line.push_str(&self.get(k, i).to_string());
            }
            line.push('\n');
            out.write_all(line.as_bytes())?;
        }
        Ok(())
    }
}

/// Parses a comma-separated numeric table.
///
/// A first row containing any non-numeric cell is taken as a header and
/// skipped. With `rows_are_observations = false` the table is transposed
/// (each line is one variable). Positions in errors are 1-based and refer
/// to lines and fields of the input.
pub fn load_matrix<R: Read>(source: R, rows_are_observations: bool) -> Result<DataMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width: Option<usize> = None;
    for (idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Format(e.to_string()))?;
        let line = idx + 1;
        if record.iter().all(str::is_empty) {
            continue;
        }
        if idx == 0 && record.iter().any(|cell| cell.parse::<f64>().is_err()) {
            width = Some(record.len());
            continue;
        }
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(Error::RaggedRow {
                row: line,
                expected,
                found: record.len(),
            });
        }
        let mut row = Vec::with_capacity(expected);
        for (j, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| Error::NonNumeric {
                row: line,
                column: j + 1,
                value: cell.to_string(),
            })?;
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    row: line,
                    column: j + 1,
                });
            }
            row.push(v);
        }
        rows.push(row);
    }

    if rows_are_observations {
        DataMatrix::from_rows(&rows)
    } else {
        let p = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        DataMatrix::from_columns(n, p, rows.concat())
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Centers each column and scales it to unit variance (divisor `n`).
pub fn standardize(x: &DataMatrix) -> Result<DataMatrix> {
    for (i, col) in x.columns().enumerate() {
        if col.iter().all(|&v| v == col[0]) {
            return Err(Error::ConstantColumn { column: i + 1 });
        }
    }
    x.map_columns(|_, src, dst| standardize_into(src, dst))
}

/// Standardizes one column into `dst`. The caller guarantees the column is
/// not constant.
pub(crate) fn standardize_into(src: &[f64], dst: &mut [f64]) {
    let m = mean(src);
    let var = src.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / src.len() as f64;
    let sd = var.sqrt();
    for (d, &v) in dst.iter_mut().zip(src) {
        *d = (v - m) / sd;
    }
}

/// Per-column sample moments, all with divisor `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnMoments {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
    /// Fourth central moment; equals `(1/n) Σ x⁴` for standardized columns.
    pub m4: Vec<f64>,
}

impl ColumnMoments {
    /// Moments of a column population with the given fourth moment, used
    /// when the generating model is known.
    pub fn known(p: usize, m4: f64) -> Self {
        Self {
            mean: vec![0.0; p],
            var: vec![1.0; p],
            m4: vec![m4; p],
        }
    }

    pub fn p(&self) -> usize {
        self.m4.len()
    }
}

pub fn column_moments(x: &DataMatrix) -> ColumnMoments {
    let p = x.p();
    let mut out = ColumnMoments {
        mean: Vec::with_capacity(p),
        var: Vec::with_capacity(p),
        m4: Vec::with_capacity(p),
    };
    for col in x.columns() {
        let m = mean(col);
        let (s2, s4) = col.iter().fold((0.0, 0.0), |(s2, s4), &v| {
            let d2 = (v - m) * (v - m);
            (s2 + d2, s4 + d2 * d2)
        });
        out.mean.push(m);
        out.var.push(s2 / col.len() as f64);
        out.m4.push(s4 / col.len() as f64);
    }
    out
}
