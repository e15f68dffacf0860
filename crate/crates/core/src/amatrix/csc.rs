use crate::error::{Error, Result};

/// Compressed sparse column storage for a square matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CscMatrix {
    dim: usize,
    col_ptrs: Vec<usize>,
    row_indices: Vec<usize>,
    values: Vec<f64>,
}

impl CscMatrix {
    /// Assembles from raw arrays. Row indices must be strictly increasing
    /// within each column.
    pub fn new(dim: usize, col_ptrs: Vec<usize>, row_indices: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if col_ptrs.len() != dim + 1 || col_ptrs[0] != 0 {
            return Err(Error::InvalidArgument("column pointer array must have dim + 1 entries starting at 0".into()));
        }
        if row_indices.len() != values.len() || *col_ptrs.last().unwrap() != values.len() {
            return Err(Error::InvalidArgument("value and index arrays disagree with column pointers".into()));
        }
        for c in 0..dim {
            let (start, end) = (col_ptrs[c], col_ptrs[c + 1]);
            if start > end {
                return Err(Error::InvalidArgument(format!("column pointers decrease at column {c}")));
            }
            let rows = &row_indices[start..end];
            if rows.iter().any(|&r| r >= dim) || rows.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidArgument(format!("bad row indices in column {c}")));
            }
        }
        Ok(Self {
            dim,
            col_ptrs,
            row_indices,
            values,
        })
    }

    /// Builds from per-column `(row, value)` lists already sorted by row.
    pub(crate) fn from_columns(dim: usize, columns: Vec<Vec<(usize, f64)>>) -> Self {
        let nnz = columns.iter().map(Vec::len).sum();
        let mut col_ptrs = Vec::with_capacity(dim + 1);
        let mut row_indices = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        col_ptrs.push(0);
        for col in columns {
            for (r, v) in col {
                row_indices.push(r);
                values.push(v);
            }
            col_ptrs.push(values.len());
        }
        Self {
            dim,
            col_ptrs,
            row_indices,
            values,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn col_ptrs(&self) -> &[usize] {
        &self.col_ptrs
    }

    pub fn row_indices(&self) -> &[usize] {
        &self.row_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        let range = self.col_ptrs[col]..self.col_ptrs[col + 1];
        match self.row_indices[range.clone()].binary_search(&row) {
            Ok(i) => self.values[range.start + i],
            Err(_) => 0.0,
        }
    }

    /// `y = A x`
    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for (c, &xc) in x.iter().enumerate() {
            if xc == 0.0 {
                continue;
            }
            for i in self.col_ptrs[c]..self.col_ptrs[c + 1] {
                y[self.row_indices[i]] += self.values[i] * xc;
            }
        }
    }

    /// `y = A^T x`
    pub fn rmatvec_into(&self, x: &[f64], y: &mut [f64]) {
        for (c, yc) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for i in self.col_ptrs[c]..self.col_ptrs[c + 1] {
                acc += self.values[i] * x[self.row_indices[i]];
            }
            *yc = acc;
        }
    }
}
