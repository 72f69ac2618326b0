//! Compressed sparse row matrices and the handful of kernels the solver needs.
//!
//! Matrices are assembled through [`CooBuilder`] (triplets, duplicates summed
//! in insertion order so symmetric assembly stays bitwise symmetric) and then
//! frozen into [`SparseMatrix`]. Values of a frozen matrix can still be
//! updated in place through the fixed sparsity pattern, which is how the
//! momentum matrix is refilled every time step.

use crate::error::LinalgError;

/// Compressed sparse row matrix.
///
/// Column indices are sorted and unique within each row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
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

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Identity matrix of size n.
    pub fn identity(n: usize) -> Self {
        SparseMatrix {
            rows: n,
            cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    /// Entries of one row as (column, value) pairs.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        self.col_idx[lo..hi]
            .iter()
            .zip(&self.values[lo..hi])
            .map(|(&j, &v)| (j, v))
    }

    /// Value at (i, j), or 0 if the entry is not stored.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        match self.find(i, j) {
            Some(k) => self.values[k],
            None => 0.0,
        }
    }

    /// Flat value index of entry (i, j) if present in the pattern.
    pub fn find(&self, i: usize, j: usize) -> Option<usize> {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        self.col_idx[lo..hi]
            .binary_search(&j)
            .ok()
            .map(|off| lo + off)
    }

    /// Add `v` to entry (i, j). Panics if the entry is not in the pattern.
    pub fn add_to(&mut self, i: usize, j: usize, v: f64) {
        let k = self
            .find(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) not in sparsity pattern"));
        self.values[k] += v;
    }

    /// y = A x.
    pub fn spmv(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.rows];
        self.spmv_into(x, &mut y);
        y
    }

    /// y = A x, writing into a caller-provided buffer.
    ///
    /// The accumulation runs in stored (row-major, column-sorted) order, so
    /// repeated calls with the same data are bitwise reproducible.
    pub fn spmv_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.cols, "spmv dimension mismatch");
        assert_eq!(y.len(), self.rows, "spmv output dimension mismatch");
        for i in 0..self.rows {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            y[i] = acc;
        }
    }

    /// xᵀ A x.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        dot(x, &self.spmv(x))
    }

    /// Weighted sum Σ coefᵢ Aᵢ on the union of the sparsity patterns.
    ///
    /// Entries present in only some terms are kept (possibly as explicit
    /// zeros), so the result can serve as a superset pattern for later
    /// in-place updates.
    pub fn linear_combination(terms: &[(f64, &SparseMatrix)]) -> SparseMatrix {
        let (rows, cols) = (terms[0].1.rows, terms[0].1.cols);
        let mut builder = CooBuilder::with_capacity(
            rows,
            cols,
            terms.iter().map(|(_, m)| m.nnz()).sum(),
        );
        for &(coef, m) in terms {
            assert_eq!((m.rows, m.cols), (rows, cols));
            for i in 0..rows {
                for k in m.row_ptr[i]..m.row_ptr[i + 1] {
                    builder.add(i, m.col_idx[k], coef * m.values[k]);
                }
            }
        }
        builder.build()
    }

    /// Maximum absolute asymmetry over all stored entries.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Inverse-diagonal vector for Jacobi preconditioning.
    ///
    /// Rows with a zero (or missing) diagonal get scale 1 so the
    /// preconditioner stays well defined on constrained-out rows.
    pub fn inverse_diagonal(&self) -> Vec<f64> {
        (0..self.rows)
            .map(|i| match self.find(i, i) {
                Some(k) if self.values[k] != 0.0 => 1.0 / self.values[k],
                _ => 1.0,
            })
            .collect()
    }

    /// Zero the row and column of every listed index and put 1 on its diagonal.
    ///
    /// This is the elimination half of symmetric Dirichlet application; the
    /// right-hand-side lifting is done by the caller against the original
    /// matrix (see [`crate::operators::apply_dirichlet`]).
    pub fn eliminate_rows_cols(&mut self, constrained: &[bool]) {
        assert_eq!(constrained.len(), self.rows);
        for i in 0..self.rows {
            let lo = self.row_ptr[i];
            let hi = self.row_ptr[i + 1];
            if constrained[i] {
                for k in lo..hi {
                    self.values[k] = if self.col_idx[k] == i { 1.0 } else { 0.0 };
                }
            } else {
                for k in lo..hi {
                    if constrained[self.col_idx[k]] {
                        self.values[k] = 0.0;
                    }
                }
            }
        }
    }
}

/// Triplet accumulator for building a [`SparseMatrix`].
pub struct CooBuilder {
    rows: usize,
    cols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl CooBuilder {
    pub fn new(rows: usize, cols: usize) -> Self {
        CooBuilder {
            rows,
            cols,
            entries: Vec::new(),
        }
    }

    pub fn with_capacity(rows: usize, cols: usize, cap: usize) -> Self {
        CooBuilder {
            rows,
            cols,
            entries: Vec::with_capacity(cap),
        }
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.rows && j < self.cols);
        self.entries.push((i, j, v));
    }

    /// Sort, combine duplicates and freeze into CSR form.
    ///
    /// The stable sort keeps duplicate entries in insertion order, so the
    /// floating-point sum for entry (i, j) matches the sum for (j, i) when
    /// the inserted element matrices were symmetric.
    pub fn build(mut self) -> SparseMatrix {
        self.entries.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; self.rows + 1];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        let mut counts = vec![0usize; self.rows];
        let mut k = 0;
        while k < self.entries.len() {
            let (i, j, mut v) = self.entries[k];
            k += 1;
            while k < self.entries.len() && self.entries[k].0 == i && self.entries[k].1 == j {
                v += self.entries[k].2;
                k += 1;
            }
            counts[i] += 1;
            col_idx.push(j);
            values.push(v);
        }
        for i in 0..self.rows {
            row_ptr[i + 1] = row_ptr[i] + counts[i];
        }
        SparseMatrix {
            rows: self.rows,
            cols: self.cols,
            row_ptr,
            col_idx,
            values,
        }
    }
}

/// Dense-vector helpers shared by the solvers.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Check inputs for a solve and fail early on mismatched shapes.
pub(crate) fn check_square(a: &SparseMatrix, b: &[f64]) -> Result<(), LinalgError> {
    if a.rows() != a.cols() {
        return Err(LinalgError::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    if a.rows() != b.len() {
        return Err(LinalgError::DimensionMismatch {
            expected: a.rows(),
            found: b.len(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_spmv_returns_input() {
        let a = SparseMatrix::identity(4);
        let x = vec![1.0, -2.0, 3.5, 0.0];
        assert_eq!(a.spmv(&x), x);
    }

    #[test]
    fn diagonal_spmv() {
        let mut b = CooBuilder::new(2, 2);
        b.add(0, 0, 2.0);
        b.add(1, 1, 3.0);
        let a = b.build();
        assert_eq!(a.spmv(&[1.0, 1.0]), vec![2.0, 3.0]);
    }

    #[test]
    fn duplicates_are_summed() {
        let mut b = CooBuilder::new(2, 2);
        b.add(0, 1, 1.5);
        b.add(0, 1, 0.25);
        b.add(1, 0, -1.0);
        let a = b.build();
        assert_eq!(a.get(0, 1), 1.75);
        assert_eq!(a.get(1, 0), -1.0);
        assert_eq!(a.get(0, 0), 0.0);
        assert_eq!(a.nnz(), 2);
    }

    #[test]
    fn random_spmv_matches_dense_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        let n = 5;
        let mut dense = vec![vec![0.0f64; n]; n];
        let mut b = CooBuilder::new(n, n);
        for i in 0..n {
            for j in 0..n {
                if rng.gen_bool(0.6) {
                    let v = rng.gen_range(-1.0..1.0);
                    dense[i][j] = v;
                    b.add(i, j, v);
                }
            }
        }
        let a = b.build();
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y = a.spmv(&x);
        for i in 0..n {
            let want: f64 = (0..n).map(|j| dense[i][j] * x[j]).sum();
            assert!((y[i] - want).abs() <= 1e-14, "row {i}: {} vs {want}", y[i]);
        }
    }

    #[test]
    fn eliminate_rows_cols_sets_unit_diagonal() {
        let mut b = CooBuilder::new(3, 3);
        for i in 0..3 {
            for j in 0..3 {
                b.add(i, j, (i + j + 1) as f64);
            }
        }
        let mut a = b.build();
        a.eliminate_rows_cols(&[false, true, false]);
        assert_eq!(a.get(1, 1), 1.0);
        assert_eq!(a.get(1, 0), 0.0);
        assert_eq!(a.get(1, 2), 0.0);
        assert_eq!(a.get(0, 1), 0.0);
        assert_eq!(a.get(2, 1), 0.0);
        assert_eq!(a.get(0, 0), 1.0);
        assert_eq!(a.get(2, 2), 5.0);
    }
}
