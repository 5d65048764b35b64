//! Compressed sparse row storage with a lazily built column mirror.

use std::sync::OnceLock;

use super::LinalgError;

/// Column-compressed view of a [`CsrMatrix`], used for `Aᵀv` products.
#[derive(Debug, Clone)]
pub struct CscMirror {
    pub colptr: Vec<usize>,
    pub rowind: Vec<usize>,
    pub values: Vec<f64>,
}

/// Row-compressed sparse matrix without explicit zeros.
#[derive(Debug)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    rowptr: Vec<usize>,
    colind: Vec<usize>,
    values: Vec<f64>,
    csc: OnceLock<CscMirror>,
}

impl Clone for CsrMatrix {
    fn clone(&self) -> Self {
        Self {
            nrows: self.nrows,
            ncols: self.ncols,
            rowptr: self.rowptr.clone(),
            colind: self.colind.clone(),
            values: self.values.clone(),
            csc: OnceLock::new(),
        }
    }
}

impl PartialEq for CsrMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.nrows == other.nrows
            && self.ncols == other.ncols
            && self.rowptr == other.rowptr
            && self.colind == other.colind
            && self.values == other.values
    }
}

impl CsrMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            rowptr: vec![0; nrows + 1],
            colind: Vec::new(),
            values: Vec::new(),
            csc: OnceLock::new(),
        }
    }

    /// Builds a matrix from `(row, col, value)` triplets. Duplicates are
    /// summed, and entries that end up exactly zero are dropped.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        rows: &[usize],
        cols: &[usize],
        vals: &[f64],
    ) -> Result<Self, LinalgError> {
        if rows.len() != cols.len() || rows.len() != vals.len() {
            return Err(LinalgError::DimensionMismatch {
                expected: rows.len(),
                found: if cols.len() != rows.len() { cols.len() } else { vals.len() },
            });
        }
        let mut entries: Vec<(usize, usize, f64)> = Vec::with_capacity(rows.len());
        for ((&r, &c), &v) in rows.iter().zip(cols).zip(vals) {
            if r >= nrows || c >= ncols {
                return Err(LinalgError::IndexOutOfRange { row: r, col: c, nrows, ncols });
            }
            if !v.is_finite() {
                return Err(LinalgError::NonFinite);
            }
            entries.push((r, c, v));
        }
        entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));

        let mut rowptr = vec![0usize; nrows + 1];
        let mut colind = Vec::with_capacity(entries.len());
        let mut values = Vec::with_capacity(entries.len());
        let mut i = 0;
        while i < entries.len() {
            let (r, c, mut v) = entries[i];
            i += 1;
            while i < entries.len() && entries[i].0 == r && entries[i].1 == c {
                v += entries[i].2;
                i += 1;
            }
            if v != 0.0 {
                colind.push(c);
                values.push(v);
                rowptr[r + 1] += 1;
            }
        }
        for r in 0..nrows {
            rowptr[r + 1] += rowptr[r];
        }
        Ok(Self { nrows, ncols, rowptr, colind, values, csc: OnceLock::new() })
    }

    /// Builds a matrix from per-row `(col, value)` lists that are already
    /// sorted by column and free of zeros and duplicates.
    pub(crate) fn from_sorted_rows(ncols: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        let nrows = rows.len();
        let mut rowptr = Vec::with_capacity(nrows + 1);
        rowptr.push(0);
        let nnz = rows.iter().map(Vec::len).sum();
        let mut colind = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        for row in rows {
            for (c, v) in row {
                debug_assert!(c < ncols);
                colind.push(c);
                values.push(v);
            }
            rowptr.push(colind.len());
        }
        Self { nrows, ncols, rowptr, colind, values, csc: OnceLock::new() }
    }

    pub fn from_dense(dense: &[Vec<f64>], ncols: usize) -> Self {
        let rows = dense
            .iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(j, v)| (j, *v))
                    .collect()
            })
            .collect();
        Self::from_sorted_rows(ncols, rows)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let span = self.rowptr[i]..self.rowptr[i + 1];
        (&self.colind[span.clone()], &self.values[span])
    }

    pub fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        let (cols, vals) = self.row(i);
        cols.iter().zip(vals).map(|(&j, &v)| v * x[j]).sum()
    }

    pub fn row_norm_sq(&self, i: usize) -> f64 {
        self.row(i).1.iter().map(|v| v * v).sum()
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &v)| (i, j, v))
        })
    }

    /// `y = A x`
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.ncols);
        (0..self.nrows).map(|i| self.row_dot(i, x)).collect()
    }

    /// `y = Aᵀ v`
    pub fn tmul_vec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.nrows);
        let csc = self.csc();
        (0..self.ncols)
            .map(|j| {
                let span = csc.colptr[j]..csc.colptr[j + 1];
                csc.rowind[span.clone()]
                    .iter()
                    .zip(&csc.values[span])
                    .map(|(&i, &a)| a * v[i])
                    .sum()
            })
            .collect()
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.nrows)
            .map(|i| self.row(i).1.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn csc(&self) -> &CscMirror {
        self.csc.get_or_init(|| {
            let mut colptr = vec![0usize; self.ncols + 1];
            for &j in &self.colind {
                colptr[j + 1] += 1;
            }
            for j in 0..self.ncols {
                colptr[j + 1] += colptr[j];
            }
            let mut next = colptr.clone();
            let mut rowind = vec![0usize; self.nnz()];
            let mut values = vec![0.0; self.nnz()];
            for i in 0..self.nrows {
                let (cols, vals) = self.row(i);
                for (&j, &v) in cols.iter().zip(vals) {
                    rowind[next[j]] = i;
                    values[next[j]] = v;
                    next[j] += 1;
                }
            }
            CscMirror { colptr, rowind, values }
        })
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.ncols]; self.nrows];
        for (i, j, v) in self.triplets() {
            out[i][j] = v;
        }
        out
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| f64::max(m, v.abs()))
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}
