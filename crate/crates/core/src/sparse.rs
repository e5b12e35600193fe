//! Compressed sparse column storage for signed incidence matrices.

/// A sparse integer matrix in CSC layout. Entries are stored as `i8`, which is
/// all incidence matrices ever need.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<i8>,
}

impl SparseMatrix {
    /// An empty `rows x 0` matrix.
    pub fn empty(rows: usize) -> Self {
        Self {
            rows,
            cols: 0,
            col_ptr: vec![0],
            row_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds a matrix column by column. Entries inside a column are sorted by
    /// row; duplicate rows are summed and explicit zeros dropped.
    pub fn from_columns<I, C>(rows: usize, columns: I) -> Self
    where
        I: IntoIterator<Item = C>,
        C: IntoIterator<Item = (usize, i8)>,
    {
        let mut m = Self::empty(rows);
        for col in columns {
            m.push_column(col);
        }
        m
    }

    pub fn push_column<C: IntoIterator<Item = (usize, i8)>>(&mut self, column: C) {
        let mut entries: Vec<(usize, i8)> = column.into_iter().collect();
        entries.sort_unstable_by_key(|&(r, _)| r);
        let mut merged: Vec<(usize, i8)> = Vec::with_capacity(entries.len());
        for (r, v) in entries {
            assert!(r < self.rows, "row {r} out of bounds for {} rows", self.rows);
            match merged.last_mut() {
                Some((lr, lv)) if *lr == r => *lv += v,
                _ => merged.push((r, v)),
            }
        }
        for (r, v) in merged.into_iter().filter(|&(_, v)| v != 0) {
            self.row_idx.push(r);
            self.values.push(v);
        }
        self.cols += 1;
        self.col_ptr.push(self.row_idx.len());
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Number of stored non-zero entries.
    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    /// Iterates `(row, value)` over column `j`.
    pub fn column(&self, j: usize) -> impl Iterator<Item = (usize, i8)> + '_ {
        let range = self.col_ptr[j]..self.col_ptr[j + 1];
        self.row_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn column_nnz(&self, j: usize) -> usize {
        self.col_ptr[j + 1] - self.col_ptr[j]
    }

    pub fn get(&self, row: usize, col: usize) -> i8 {
        self.column(col)
            .find(|&(r, _)| r == row)
            .map_or(0, |(_, v)| v)
    }

    /// Row-major dense copy, mostly for tests and small diagnostics.
    pub fn to_dense(&self) -> Vec<Vec<i64>> {
        let mut dense = vec![vec![0i64; self.cols]; self.rows];
        for j in 0..self.cols {
            for (i, v) in self.column(j) {
                dense[i][j] = v as i64;
            }
        }
        dense
    }

    /// Exact integer product `self * other` as a list of non-zero entries
    /// `(row, col, value)`.
    pub fn product_nonzeros(&self, other: &SparseMatrix) -> Vec<(usize, usize, i64)> {
        assert_eq!(self.cols, other.rows, "inner dimensions differ");
        let mut out = Vec::new();
        let mut acc = vec![0i64; self.rows];
        let mut touched = Vec::new();
        for j in 0..other.cols {
            for (k, b) in other.column(j) {
                for (i, a) in self.column(k) {
                    if acc[i] == 0 {
                        touched.push(i);
                    }
                    acc[i] += a as i64 * b as i64;
                }
            }
            touched.sort_unstable();
            touched.dedup();
            for &i in &touched {
                if acc[i] != 0 {
                    out.push((i, j, acc[i]));
                }
                acc[i] = 0;
            }
            touched.clear();
        }
        out
    }

    /// `y += A x`
    pub fn mul_add(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(y.len(), self.rows);
        for (j, &xj) in x.iter().enumerate() {
            if xj == 0.0 {
                continue;
            }
            for (i, v) in self.column(j) {
                y[i] += v as f64 * xj;
            }
        }
    }

    /// `x += A^T y`
    pub fn mul_transpose_add(&self, y: &[f64], x: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(y.len(), self.rows);
        for (j, xj) in x.iter_mut().enumerate() {
            *xj += self.column(j).map(|(i, v)| v as f64 * y[i]).sum::<f64>();
        }
    }

    /// The transpose, again in CSC layout.
    pub fn transpose(&self) -> SparseMatrix {
        let mut cols: Vec<Vec<(usize, i8)>> = vec![Vec::new(); self.rows];
        for j in 0..self.cols {
            for (i, v) in self.column(j) {
                cols[i].push((j, v));
            }
        }
        SparseMatrix::from_columns(self.cols, cols)
    }
}
