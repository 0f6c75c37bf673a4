//! Shared matrix types used across the pipeline stages.

use std::fmt::Write as _;

use crate::textio::{self, TextIoError};

/// A sparse row: `(column, weight)` pairs sorted by column index.
pub type SparseRow = Vec<(u32, f64)>;

/// Sparse document-term matrix in compressed-row form.
///
/// Rows are documents in corpus order, columns are vocabulary indices.
/// Entries within a row are sorted by column and never duplicated.
#[derive(Debug, Clone, PartialEq)]
pub struct TermDocMatrix {
    n_rows: usize,
    n_cols: usize,
    indptr: Vec<usize>,
    indices: Vec<u32>,
    data: Vec<f64>,
}

impl TermDocMatrix {
    /// An empty matrix with the given column count.
    pub fn new(n_cols: usize) -> Self {
        TermDocMatrix {
            n_rows: 0,
            n_cols,
            indptr: vec![0],
            indices: Vec::new(),
            data: Vec::new(),
        }
    }

    /// Stack sparse rows into a matrix. Each row must be sorted by column
    /// with no duplicates and all columns `< n_cols`.
    pub fn from_rows(n_cols: usize, rows: &[SparseRow]) -> Self {
        let mut m = TermDocMatrix::new(n_cols);
        for row in rows {
            m.push_row(row);
        }
        m
    }

    /// Append one sparse row.
    pub fn push_row(&mut self, row: &[(u32, f64)]) {
        debug_assert!(row.windows(2).all(|w| w[0].0 < w[1].0), "row not sorted");
        for &(col, w) in row {
            assert!((col as usize) < self.n_cols, "column {col} out of bounds");
            self.indices.push(col);
            self.data.push(w);
        }
        self.n_rows += 1;
        self.indptr.push(self.indices.len());
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    /// Column indices and weights of row `i`.
    pub fn row(&self, i: usize) -> (&[u32], &[f64]) {
        let lo = self.indptr[i];
        let hi = self.indptr[i + 1];
        (&self.indices[lo..hi], &self.data[lo..hi])
    }

    /// All `(row, col, weight)` triples in row-major order.
    pub fn iter_entries(&self) -> impl Iterator<Item = (usize, u32, f64)> + '_ {
        (0..self.n_rows).flat_map(move |r| {
            let (cols, vals) = self.row(r);
            cols.iter().zip(vals).map(move |(&c, &v)| (r, c, v))
        })
    }

    /// Squared Frobenius norm; equals the sum of squared singular values.
    pub fn frobenius_norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    /// Select a subset of rows (in the given order) into a new matrix.
    pub fn select_rows(&self, rows: &[usize]) -> TermDocMatrix {
        let mut out = TermDocMatrix::new(self.n_cols);
        for &r in rows {
            let (cols, vals) = self.row(r);
            let row: SparseRow = cols.iter().copied().zip(vals.iter().copied()).collect();
            out.push_row(&row);
        }
        out
    }

    /// Text export: header `n_rows n_cols nnz`, then one `row col weight`
    /// triple per line, weights at 17 significant digits.
    pub fn write_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {} {}", self.n_rows, self.n_cols, self.nnz());
        for (r, c, v) in self.iter_entries() {
            let _ = writeln!(out, "{} {} {}", r, c, textio::fmt_f64(v));
        }
        out
    }

    /// Parse the `write_text` format.
    pub fn read_text(text: &str) -> Result<Self, TextIoError> {
        let mut lines = text.lines();
        let header = lines.next().ok_or(TextIoError::UnexpectedEof)?;
        let mut it = header.split_ascii_whitespace();
        let n_rows: usize = textio::parse_field(it.next(), "n_rows")?;
        let n_cols: usize = textio::parse_field(it.next(), "n_cols")?;
        let nnz: usize = textio::parse_field(it.next(), "nnz")?;
        let mut rows: Vec<SparseRow> = vec![Vec::new(); n_rows];
        for _ in 0..nnz {
            let line = lines.next().ok_or(TextIoError::UnexpectedEof)?;
            let mut it = line.split_ascii_whitespace();
            let r: usize = textio::parse_field(it.next(), "row")?;
            let c: u32 = textio::parse_field(it.next(), "col")?;
            let v: f64 = textio::parse_field(it.next(), "weight")?;
            if r >= n_rows {
                return Err(TextIoError::Malformed(format!("row {r} out of bounds")));
            }
            rows[r].push((c, v));
        }
        Ok(TermDocMatrix::from_rows(n_cols, &rows))
    }
}

/// Dense row-major matrix of feature vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n_rows: usize,
    n_cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        DenseMatrix {
            n_rows,
            n_cols,
            data: vec![0.0; n_rows * n_cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for row in rows {
            assert_eq!(row.len(), n_cols, "ragged rows");
            data.extend_from_slice(row);
        }
        DenseMatrix {
            n_rows,
            n_cols,
            data,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn select_rows(&self, rows: &[usize]) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(rows.len(), self.n_cols);
        for (dst, &src) in rows.iter().enumerate() {
            out.row_mut(dst).copy_from_slice(self.row(src));
        }
        out
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}
