//! Storage for the observed non-negative matrix.
//!
//! Only strictly positive entries are stored; every other cell is an implicit
//! zero. The matrix keeps both a compressed-row and a compressed-column copy of
//! the same entry set so that row sweeps and column sweeps are both O(nnz).

use std::collections::HashSet;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// The positive entries of one row (or one column) of the matrix.
///
/// `indices` are the opposite-side indices in increasing order and `values`
/// the matching observations. `len` is the full length of the line, zeros
/// included.
#[derive(Debug, Clone, Copy)]
pub struct Line<'a> {
    pub indices: &'a [usize],
    pub values: &'a [f64],
    pub len: usize,
}

impl<'a> Line<'a> {
    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn n_zeros(&self) -> usize {
        self.len - self.indices.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + 'a {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    /// Walks every position `0..len`, yielding the observation (0.0 for
    /// implicit zeros).
    pub fn dense_iter(&self) -> impl Iterator<Item = (usize, f64)> + 'a {
        let indices = self.indices;
        let values = self.values;
        let mut cursor = 0;
        (0..self.len).map(move |k| {
            if cursor < indices.len() && indices[cursor] == k {
                cursor += 1;
                (k, values[cursor - 1])
            } else {
                (k, 0.0)
            }
        })
    }
}

/// Observed matrix `Y` with dual row-major / column-major access.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseCountMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    row_val: Vec<f64>,
    col_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    col_val: Vec<f64>,
}

impl SparseCountMatrix {
    /// Builds the matrix from `(row, col, value)` triples. Zero values are
    /// dropped; duplicate keys, negative or non-finite values and out of range
    /// indices are rejected.
    pub fn from_triples(
        triples: impl IntoIterator<Item = (usize, usize, f64)>,
        n_rows: usize,
        n_cols: usize,
    ) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut kept = Vec::new();
        for (row, col, value) in triples {
            if row >= n_rows || col >= n_cols {
                return Err(Error::IndexOutOfRange {
                    row,
                    col,
                    n_rows,
                    n_cols,
                });
            }
            if !value.is_finite() || value < 0.0 {
                return Err(Error::InvalidValue { row, col, value });
            }
            if !seen.insert((row, col)) {
                return Err(Error::DuplicateEntry { row, col });
            }
            if value > 0.0 {
                kept.push((row, col, value));
            }
        }

        kept.sort_by_key(|&(r, c, _)| (r, c));
        let (row_ptr, row_idx, row_val) = compress(n_rows, kept.iter().map(|&(r, c, v)| (r, c, v)));
        kept.sort_by_key(|&(r, c, _)| (c, r));
        let (col_ptr, col_idx, col_val) = compress(n_cols, kept.iter().map(|&(r, c, v)| (c, r, v)));

        Ok(Self {
            n_rows,
            n_cols,
            row_ptr,
            row_idx,
            row_val,
            col_ptr,
            col_idx,
            col_val,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.row_val.len()
    }

    pub fn row(&self, i: usize) -> Line<'_> {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        Line {
            indices: &self.row_idx[a..b],
            values: &self.row_val[a..b],
            len: self.n_cols,
        }
    }

    pub fn col(&self, j: usize) -> Line<'_> {
        let (a, b) = (self.col_ptr[j], self.col_ptr[j + 1]);
        Line {
            indices: &self.col_idx[a..b],
            values: &self.col_val[a..b],
            len: self.n_rows,
        }
    }

    /// Value at `(i, j)`, 0.0 when the cell is not stored.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let line = self.row(i);
        match line.indices.binary_search(&j) {
            Ok(k) => line.values[k],
            Err(_) => 0.0,
        }
    }

    /// Fraction of cells holding a positive value.
    pub fn density(&self) -> Result<f64> {
        let cells = self.n_rows * self.n_cols;
        if cells == 0 {
            return Err(Error::EmptyDimension);
        }
        Ok(self.nnz() as f64 / cells as f64)
    }

    /// Positive entries in row-major order.
    pub fn triples(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_rows).flat_map(move |i| self.row(i).iter().map(move |(j, y)| (i, j, y)))
    }

    /// Positive entries in column-major order.
    pub fn triples_by_col(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_cols).flat_map(move |j| self.col(j).iter().map(move |(i, y)| (i, j, y)))
    }

    /// Writes the "triples-v1" text format.
    pub fn write_triples<W: Write>(&self, mut out: W) -> Result<()> {
        let mut buf = String::new();
        writeln!(buf, "#sazig-triples {} {}", self.n_rows, self.n_cols).unwrap();
        for (i, j, y) in self.triples() {
            writeln!(buf, "{i}\t{j}\t{}", crate::io::fmt17(y)).unwrap();
        }
        out.write_all(buf.as_bytes())?;
        Ok(())
    }

    /// Reads the "triples-v1" text format.
    pub fn read_triples<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "missing header".into(),
        })??;
        let mut parts = header.split_whitespace();
        if parts.next() != Some("#sazig-triples") {
            return Err(Error::Parse {
                line: 1,
                msg: "expected '#sazig-triples n_rows n_cols'".into(),
            });
        }
        let n_rows = crate::io::parse_field::<usize>(parts.next(), 1, "n_rows")?;
        let n_cols = crate::io::parse_field::<usize>(parts.next(), 1, "n_cols")?;

        let mut triples = Vec::new();
        for (k, line) in lines.enumerate() {
            let line = line?;
            let lineno = k + 2;
            if line.trim().is_empty() {
                continue;
            }
            let mut f = line.split('\t');
            let i = crate::io::parse_field::<usize>(f.next(), lineno, "row")?;
            let j = crate::io::parse_field::<usize>(f.next(), lineno, "col")?;
            let y = crate::io::parse_field::<f64>(f.next(), lineno, "value")?;
            triples.push((i, j, y));
        }
        Self::from_triples(triples, n_rows, n_cols)
    }
}

fn compress(n_major: usize, sorted: impl Iterator<Item = (usize, usize, f64)>) -> (Vec<usize>, Vec<usize>, Vec<f64>) {
    let mut ptr = vec![0usize; n_major + 1];
    let mut idx = Vec::new();
    let mut val = Vec::new();
    for (major, minor, v) in sorted {
        ptr[major + 1] += 1;
        idx.push(minor);
        val.push(v);
    }
    for k in 0..n_major {
        ptr[k + 1] += ptr[k];
    }
    (ptr, idx, val)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_positive_entry() {
        let m = SparseCountMatrix::from_triples([(0, 0, 2.5)], 1, 1).unwrap();
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.get(0, 0), 2.5);
    }

    #[test]
    fn zero_is_dropped() {
        let m = SparseCountMatrix::from_triples([(0, 0, 0.0)], 1, 1).unwrap();
        assert_eq!(m.nnz(), 0);
        assert_eq!(m.get(0, 0), 0.0);
    }

    #[test]
    fn duplicate_key_rejected() {
        let err = SparseCountMatrix::from_triples([(0, 1, 1.0), (0, 1, 2.0)], 1, 2).unwrap_err();
        assert!(matches!(err, Error::DuplicateEntry { row: 0, col: 1 }));
    }

    #[test]
    fn out_of_range_and_negative_rejected() {
        assert!(matches!(
            SparseCountMatrix::from_triples([(2, 0, 1.0)], 2, 2),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            SparseCountMatrix::from_triples([(0, 0, -1.0)], 2, 2),
            Err(Error::InvalidValue { .. })
        ));
    }

    #[test]
    fn density_cases() {
        let empty = SparseCountMatrix::from_triples([], 10, 10).unwrap();
        assert_eq!(empty.density().unwrap(), 0.0);
        let full = SparseCountMatrix::from_triples([(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)], 2, 2).unwrap();
        assert_eq!(full.density().unwrap(), 1.0);
        let one = SparseCountMatrix::from_triples([(1, 0, 3.0)], 2, 2).unwrap();
        assert_eq!(one.density().unwrap(), 0.25);
        let degenerate = SparseCountMatrix::from_triples([], 0, 3).unwrap();
        assert!(matches!(degenerate.density(), Err(Error::EmptyDimension)));
    }

    #[test]
    fn dense_iter_fills_zeros() {
        let m = SparseCountMatrix::from_triples([(0, 1, 2.0), (0, 3, 4.0)], 1, 5).unwrap();
        let dense: Vec<f64> = m.row(0).dense_iter().map(|(_, y)| y).collect();
        assert_eq!(dense, vec![0.0, 2.0, 0.0, 4.0, 0.0]);
    }

    #[test]
    fn missing_header_is_parse_error() {
        let err = SparseCountMatrix::read_triples("0\t0\t1.0\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }
}
