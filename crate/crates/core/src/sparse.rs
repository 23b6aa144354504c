//! Minimal compressed-sparse-row matrix for network generators.

/// Row-compressed real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            row_ptr: vec![0; rows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Build from per-row entry lists. Duplicate columns within a row are summed.
    pub fn from_rows(cols: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        let nnz: usize = rows.iter().map(Vec::len).sum();
        let mut col_idx = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        for mut row in rows {
            row.sort_unstable_by_key(|&(c, _)| c);
            let start = col_idx.len();
            for (c, v) in row {
                assert!(c < cols, "column {c} out of bounds for {cols} columns");
                if col_idx.len() > start && *col_idx.last().unwrap() == c {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(c);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            rows: n,
            cols,
            row_ptr,
            col_idx,
            values,
        }
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

    /// `(column, value)` pairs stored in `row`.
    pub fn row(&self, row: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[row]..self.row_ptr[row + 1];
        self.col_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        let span = self.row_ptr[row]..self.row_ptr[row + 1];
        match self.col_idx[span.clone()].binary_search(&col) {
            Ok(k) => self.values[span.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn row_sum(&self, row: usize) -> f64 {
        self.row(row).map(|(_, v)| v).sum()
    }

    /// `y = A x`
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.cols);
        assert_eq!(y.len(), self.rows);
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row(i).map(|(j, v)| v * x[j]).sum();
        }
    }

    /// `y = A^T x`
    pub fn mul_transpose_vec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.rows);
        assert_eq!(y.len(), self.cols);
        y.iter_mut().for_each(|v| *v = 0.0);
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for (j, v) in self.row(i) {
                y[j] += v * xi;
            }
        }
    }

    /// Entry-wise sum of matrices with identical shapes.
    pub fn sum(parts: &[&CsrMatrix]) -> CsrMatrix {
        let first = parts.first().expect("at least one matrix");
        let rows = (0..first.rows)
            .map(|i| {
                parts
                    .iter()
                    .flat_map(|m| {
                        assert_eq!((m.rows, m.cols), (first.rows, first.cols));
                        m.row(i)
                    })
                    .collect()
            })
            .collect();
        CsrMatrix::from_rows(first.cols, rows)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.cols]; self.rows];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] += v;
            }
        }
        out
    }

    /// Iterate over all stored `(row, col, value)` triplets.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn build_and_multiply() {
        let m = CsrMatrix::from_rows(
            3,
            vec![vec![(2, 1.0), (0, 2.0), (2, 0.5)], vec![], vec![(1, -1.0)]],
        );
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.get(0, 2), 1.5);
        assert_eq!(m.get(1, 1), 0.0);
        let mut y = vec![0.0; 3];
        m.mul_vec(&[1.0, 2.0, 3.0], &mut y);
        assert_eq!(y, vec![6.5, 0.0, -2.0]);
        m.mul_transpose_vec(&[1.0, 2.0, 3.0], &mut y);
        assert_eq!(y, vec![2.0, -3.0, 1.5]);
    }

    #[test]
    fn sum_merges_patterns() {
        let a = CsrMatrix::from_rows(2, vec![vec![(0, 1.0)], vec![(1, 1.0)]]);
        let b = CsrMatrix::from_rows(2, vec![vec![(1, 2.0)], vec![(1, 1.0)]]);
        let s = CsrMatrix::sum(&[&a, &b]);
        assert_eq!(s.to_dense(), vec![vec![1.0, 2.0], vec![0.0, 2.0]]);
    }
}
