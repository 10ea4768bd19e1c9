//! Dense row-major matrices over `f64`.
//!
//! Dense storage backs feature blocks, label indicators, network weights and
//! the exact spectral reference computations. Sizes stay moderate (vertex
//! count by feature or class count), so the kernels favor clarity and
//! reproducibility over blocking tricks. Parallel kernels split work by
//! output row and keep every per-row reduction sequential, which makes the
//! results bitwise identical for any thread count.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Dense row-major matrix of `f64`. All stored entries are finite; the
/// constructors enforce this so downstream numeric code never has to test
/// for NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n_rows: usize,
    n_cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    /// Matrix of zeros.
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        DenseMatrix {
            n_rows,
            n_cols,
            data: vec![0.0; n_rows * n_cols],
        }
    }

    /// Identity matrix of order `n`.
    pub fn identity(n: usize) -> Self {
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Build from nested rows. Rejects ragged input and non-finite entries.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_cols {
                return Err(Error::DimensionMismatch {
                    op: "from_rows",
                    left_rows: 1,
                    left_cols: n_cols,
                    right_rows: 1,
                    right_cols: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFinite {
                        op: "from_rows",
                        row: i,
                        col: j,
                        value: v,
                    });
                }
                data.push(v);
            }
        }
        Ok(DenseMatrix {
            n_rows,
            n_cols,
            data,
        })
    }

    /// Build from a flat row-major buffer of length `n_rows * n_cols`.
    pub fn from_vec(n_rows: usize, n_cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n_rows * n_cols {
            return Err(Error::DimensionMismatch {
                op: "from_vec",
                left_rows: n_rows,
                left_cols: n_cols,
                right_rows: 1,
                right_cols: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                op: "from_vec",
                row: pos / n_cols.max(1),
                col: pos % n_cols.max(1),
                value: data[pos],
            });
        }
        Ok(DenseMatrix {
            n_rows,
            n_cols,
            data,
        })
    }

    /// Build entrywise from a closure. The closure must return finite values;
    /// this is checked in debug builds.
    pub fn from_fn(n_rows: usize, n_cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for i in 0..n_rows {
            for j in 0..n_cols {
                let v = f(i, j);
                debug_assert!(v.is_finite(), "from_fn produced {v} at ({i}, {j})");
                data.push(v);
            }
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

    pub fn get(&self, row: usize, col: usize) -> f64 {
        debug_assert!(row < self.n_rows && col < self.n_cols);
        self.data[row * self.n_cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.n_rows && col < self.n_cols);
        debug_assert!(value.is_finite(), "set called with {value}");
        self.data[row * self.n_cols + col] = value;
    }

    /// Borrow row `i` as a slice.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    /// Flat row-major view of all entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Extract one column.
    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_rows).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.n_cols, self.n_rows, |i, j| self.get(j, i))
    }

    /// New matrix holding the given rows of `self`, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(rows.len(), self.n_cols);
        for (dst, &src) in rows.iter().enumerate() {
            out.row_mut(dst).copy_from_slice(self.row(src));
        }
        out
    }

    /// `self * rhs`. Parallel over output rows, sequential within each row,
    /// so the result does not depend on the thread count.
    pub fn matmul(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        if self.n_cols != rhs.n_rows {
            return Err(self.shape_error("matmul", rhs));
        }
        let mut out = DenseMatrix::zeros(self.n_rows, rhs.n_cols);
        let n_cols = rhs.n_cols.max(1);
        out.data
            .par_chunks_mut(n_cols)
            .enumerate()
            .for_each(|(i, out_row)| {
                for (k, &aik) in self.row(i).iter().enumerate() {
                    if aik != 0.0 {
                        let b_row = rhs.row(k);
                        for (o, &b) in out_row.iter_mut().zip(b_row) {
                            *o += aik * b;
                        }
                    }
                }
            });
        Ok(out)
    }

    /// `self^T * rhs`, without materializing the transpose. Runs sequentially;
    /// every use in the crate is small (gradient accumulation over labeled
    /// rows or hidden activations).
    pub fn transpose_matmul(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        if self.n_rows != rhs.n_rows {
            return Err(self.shape_error("transpose_matmul", rhs));
        }
        let mut out = DenseMatrix::zeros(self.n_cols, rhs.n_cols);
        for i in 0..self.n_rows {
            let a_row = self.row(i);
            let b_row = rhs.row(i);
            for (k, &aik) in a_row.iter().enumerate() {
                if aik != 0.0 {
                    let out_row = out.row_mut(k);
                    for (o, &b) in out_row.iter_mut().zip(b_row) {
                        *o += aik * b;
                    }
                }
            }
        }
        Ok(out)
    }

    /// `self * rhs^T`. Each output entry is a dot product of two rows, which
    /// keeps both operands in row-major order.
    pub fn matmul_transpose_right(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        if self.n_cols != rhs.n_cols {
            return Err(self.shape_error("matmul_transpose_right", rhs));
        }
        let mut out = DenseMatrix::zeros(self.n_rows, rhs.n_rows);
        let n_cols = rhs.n_rows.max(1);
        out.data
            .par_chunks_mut(n_cols)
            .enumerate()
            .for_each(|(i, out_row)| {
                let a_row = self.row(i);
                for (j, o) in out_row.iter_mut().enumerate() {
                    let b_row = rhs.row(j);
                    *o = a_row.iter().zip(b_row).map(|(&a, &b)| a * b).sum();
                }
            });
        Ok(out)
    }

    /// `self += factor * other`.
    pub fn axpy(&mut self, factor: f64, other: &DenseMatrix) -> Result<()> {
        if self.n_rows != other.n_rows || self.n_cols != other.n_cols {
            return Err(self.shape_error("axpy", other));
        }
        for (s, &o) in self.data.iter_mut().zip(&other.data) {
            *s += factor * o;
        }
        Ok(())
    }

    /// Multiply every entry by `factor`.
    pub fn scale(&mut self, factor: f64) {
        for v in &mut self.data {
            *v *= factor;
        }
    }

    /// Largest absolute entry; 0 for an empty matrix.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// Largest absolute entrywise difference. Panics on shape mismatch since
    /// this is a comparison utility, not a data path.
    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        assert_eq!(
            (self.n_rows, self.n_cols),
            (other.n_rows, other.n_cols),
            "max_abs_diff on mismatched shapes"
        );
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |acc, (a, b)| acc.max((a - b).abs()))
    }

    /// Frobenius norm.
    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Estimate of the spectral norm by power iteration on `A^T A`. Uses a
    /// fixed deterministic starting vector and iteration count, which is
    /// plenty for the tolerance checks it serves.
    #[allow(clippy::needless_range_loop)]
    pub fn operator_norm(&self) -> f64 {
        if self.n_rows == 0 || self.n_cols == 0 {
            return 0.0;
        }
        let mut v: Vec<f64> = (0..self.n_cols)
            .map(|j| 1.0 + 0.25 * ((j % 7) as f64) / 7.0)
            .collect();
        normalize(&mut v);
        let mut sigma = 0.0;
        for _ in 0..300 {
            // w = A v, then v = A^T w, tracking sigma = |A v|.
            let mut w = vec![0.0; self.n_rows];
            for i in 0..self.n_rows {
                w[i] = self.row(i).iter().zip(&v).map(|(&a, &x)| a * x).sum();
            }
            sigma = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            if sigma == 0.0 {
                return 0.0;
            }
            let mut next = vec![0.0; self.n_cols];
            for i in 0..self.n_rows {
                let wi = w[i];
                for (n, &a) in next.iter_mut().zip(self.row(i)) {
                    *n += a * wi;
                }
            }
            v = next;
            normalize(&mut v);
        }
        sigma
    }

    fn shape_error(&self, op: &'static str, rhs: &DenseMatrix) -> Error {
        Error::DimensionMismatch {
            op,
            left_rows: self.n_rows,
            left_cols: self.n_cols,
            right_rows: rhs.n_rows,
            right_cols: rhs.n_cols,
        }
    }
}

fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in v {
            *x /= norm;
        }
    }
}

/// Solve `A X = B` by LU decomposition with partial pivoting. `A` must be
/// square and nonsingular; `B` may have any column count. Used for exact
/// inverse-filter references and for small exact propagation solves.
pub fn solve_linear(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    if a.n_rows != a.n_cols {
        return Err(Error::NotSquare {
            op: "solve_linear",
            n_rows: a.n_rows,
            n_cols: a.n_cols,
        });
    }
    if a.n_rows != b.n_rows {
        return Err(Error::DimensionMismatch {
            op: "solve_linear",
            left_rows: a.n_rows,
            left_cols: a.n_cols,
            right_rows: b.n_rows,
            right_cols: b.n_cols,
        });
    }
    let n = a.n_rows;
    let mut lu = a.clone();
    let mut x = b.clone();
    for col in 0..n {
        // Partial pivoting: bring the largest remaining entry of this column
        // onto the diagonal.
        let (pivot_row, pivot_abs) = (col..n)
            .map(|r| (r, lu.get(r, col).abs()))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .expect("non-empty pivot search");
        if pivot_abs < 1e-300 {
            return Err(Error::InvalidConfig {
                what: format!("solve_linear: matrix is singular at column {col}"),
            });
        }
        if pivot_row != col {
            swap_rows(&mut lu, col, pivot_row);
            swap_rows(&mut x, col, pivot_row);
        }
        let pivot = lu.get(col, col);
        for r in col + 1..n {
            let factor = lu.get(r, col) / pivot;
            if factor == 0.0 {
                continue;
            }
            lu.set(r, col, 0.0);
            for c in col + 1..n {
                let v = lu.get(r, c) - factor * lu.get(col, c);
                lu.set(r, c, v);
            }
            for c in 0..x.n_cols {
                let v = x.get(r, c) - factor * x.get(col, c);
                x.set(r, c, v);
            }
        }
    }
    // Back substitution.
    for col in (0..n).rev() {
        let pivot = lu.get(col, col);
        for c in 0..x.n_cols {
            let v = x.get(col, c) / pivot;
            x.set(col, c, v);
        }
        for r in 0..col {
            let factor = lu.get(r, col);
            if factor == 0.0 {
                continue;
            }
            for c in 0..x.n_cols {
                let v = x.get(r, c) - factor * x.get(col, c);
                x.set(r, c, v);
            }
        }
    }
    Ok(x)
}

fn swap_rows(m: &mut DenseMatrix, a: usize, b: usize) {
    if a == b {
        return;
    }
    let n_cols = m.n_cols;
    let (lo, hi) = (a.min(b), a.max(b));
    let (head, tail) = m.data.split_at_mut(hi * n_cols);
    head[lo * n_cols..(lo + 1) * n_cols].swap_with_slice(&mut tail[..n_cols]);
}
