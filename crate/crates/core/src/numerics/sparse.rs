use crate::error::{check_len, Error, Result};

/// Compressed sparse-row matrix with sorted, unique column indices and no
/// stored zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Validates raw CSR arrays. Explicit zeros are dropped.
    pub fn try_new(
        rows: usize,
        cols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        check_len("row_ptr", rows + 1, row_ptr.len())?;
        check_len("values", col_idx.len(), values.len())?;
        if row_ptr[0] != 0 || row_ptr[rows] != values.len() {
            return Err(Error::Malformed("row_ptr must start at 0 and end at nnz".into()));
        }
        for r in 0..rows {
            let (lo, hi) = (row_ptr[r], row_ptr[r + 1]);
            if lo > hi {
                return Err(Error::Malformed(format!("row_ptr decreases at row {r}")));
            }
            for k in lo..hi {
                if col_idx[k] >= cols {
                    return Err(Error::Malformed(format!(
                        "column index {} out of range in row {r}",
                        col_idx[k]
                    )));
                }
                if k > lo && col_idx[k] <= col_idx[k - 1] {
                    return Err(Error::Malformed(format!(
                        "column indices not strictly increasing in row {r}"
                    )));
                }
                if !values[k].is_finite() {
                    return Err(Error::NonFinite { index: k });
                }
            }
        }
        let mut m = SparseMatrix {
            rows,
            cols,
            row_ptr,
            col_idx,
            values,
        };
        m.drop_zeros();
        Ok(m)
    }

    /// Builds a matrix from per-row `(column, value)` lists. Entries within a
    /// row may be unsorted; duplicates are summed.
    pub fn from_rows(cols: usize, rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for (r, mut row) in rows.into_iter().enumerate() {
            row.sort_by_key(|&(c, _)| c);
            let start = col_idx.len();
            for (c, v) in row {
                if c >= cols {
                    return Err(Error::Malformed(format!(
                        "column index {c} out of range in row {r}"
                    )));
                }
                if col_idx.len() > start && *col_idx.last().unwrap() == c {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(c);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        let nrows = row_ptr.len() - 1;
        Self::try_new(nrows, cols, row_ptr, col_idx, values)
    }

    /// Row-major dense input; zeros are not stored.
    pub fn from_dense(rows: usize, cols: usize, dense: &[f64]) -> Result<Self> {
        check_len("dense matrix", rows * cols, dense.len())?;
        let rows_vec = (0..rows)
            .map(|r| {
                (0..cols)
                    .filter_map(|c| {
                        let v = dense[r * cols + c];
                        (v != 0.0).then_some((c, v))
                    })
                    .collect()
            })
            .collect();
        Self::from_rows(cols, rows_vec)
    }

    pub fn identity(n: usize) -> Self {
        SparseMatrix {
            rows: n,
            cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    fn drop_zeros(&mut self) {
        if self.values.iter().all(|&v| v != 0.0) {
            return;
        }
        let mut row_ptr = Vec::with_capacity(self.rows + 1);
        let mut col_idx = Vec::with_capacity(self.col_idx.len());
        let mut values = Vec::with_capacity(self.values.len());
        row_ptr.push(0);
        for r in 0..self.rows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                if self.values[k] != 0.0 {
                    col_idx.push(self.col_idx[k]);
                    values.push(self.values[k]);
                }
            }
            row_ptr.push(col_idx.len());
        }
        self.row_ptr = row_ptr;
        self.col_idx = col_idx;
        self.values = values;
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values of row `r`.
    #[inline]
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let (lo, hi) = (self.row_ptr[r], self.row_ptr[r + 1]);
        (&self.col_idx[lo..hi], &self.values[lo..hi])
    }

    #[inline]
    pub fn row_dot(&self, r: usize, u: &[f64]) -> f64 {
        let (cols, vals) = self.row(r);
        cols.iter().zip(vals).map(|(&c, &v)| v * u[c]).sum()
    }

    pub fn row_norm(&self, r: usize) -> f64 {
        self.row(r).1.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Number of rows with a nonzero in each column.
    pub fn column_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.cols];
        for &c in &self.col_idx {
            counts[c] += 1;
        }
        counts
    }

    /// Returns `Au`.
    pub fn spmv(&self, u: &[f64]) -> Result<Vec<f64>> {
        check_len("spmv input", self.cols, u.len())?;
        let mut out = vec![0.0; self.rows];
        self.spmv_into(u, &mut out);
        Ok(out)
    }

    /// Unchecked `out = Au`; callers guarantee the lengths.
    pub(crate) fn spmv_into(&self, u: &[f64], out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate() {
            *o = self.row_dot(r, u);
        }
    }

    /// Returns `Aᵀv`. Accumulation runs serially in row order, so the result
    /// is bitwise reproducible.
    pub fn spmv_transpose(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_len("spmv_transpose input", self.rows, v.len())?;
        let mut out = vec![0.0; self.cols];
        self.spmv_transpose_into(v, &mut out);
        Ok(out)
    }

    pub(crate) fn spmv_transpose_into(&self, v: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (r, &vr) in v.iter().enumerate() {
            if vr == 0.0 {
                continue;
            }
            let (cols, vals) = self.row(r);
            for (&c, &a) in cols.iter().zip(vals) {
                out[c] += a * vr;
            }
        }
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut dense = vec![0.0; self.rows * self.cols];
        for r in 0..self.rows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                dense[r * self.cols + c] = v;
            }
        }
        dense
    }

    /// Keeps the listed rows, each multiplied by the paired factor.
    pub(crate) fn select_scaled_rows(&self, rows: &[(usize, f64)]) -> SparseMatrix {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for &(r, s) in rows {
            let (cols, vals) = self.row(r);
            col_idx.extend_from_slice(cols);
            values.extend(vals.iter().map(|v| v * s));
            row_ptr.push(col_idx.len());
        }
        SparseMatrix {
            rows: rows.len(),
            cols: self.cols,
            row_ptr,
            col_idx,
            values,
        }
    }
}
