//! Dense row-major `f64` matrix, sized for small recurrent cells.
//!
//! Only the handful of operations the forward and backward passes need:
//! matrix-vector products, transposed products and rank-one accumulation.

use serde::{Deserialize, Serialize};

/// Row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// All-zero matrix of the given shape.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Builds a matrix by evaluating `f(row, col)` in row-major order.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        debug_assert!(row < self.rows && col < self.cols);
        self.data[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.rows && col < self.cols);
        self.data[row * self.cols + col] = value;
    }

    /// Flat row-major view of the entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "matvec dimension mismatch");
        self.data
            .chunks_exact(self.cols)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `out += A^T y`.
    pub fn transpose_matvec_acc(&self, y: &[f64], out: &mut [f64]) {
        assert_eq!(y.len(), self.rows, "transpose_matvec dimension mismatch");
        assert_eq!(out.len(), self.cols, "transpose_matvec output mismatch");
        for (row, &yr) in self.data.chunks_exact(self.cols).zip(y) {
            for (o, &a) in out.iter_mut().zip(row) {
                *o += a * yr;
            }
        }
    }

    /// Rank-one update `A += y x^T`.
    pub fn add_outer(&mut self, y: &[f64], x: &[f64]) {
        assert_eq!(y.len(), self.rows, "add_outer row mismatch");
        assert_eq!(x.len(), self.cols, "add_outer col mismatch");
        for (row, &yr) in self.data.chunks_exact_mut(self.cols).zip(y) {
            for (a, &xc) in row.iter_mut().zip(x) {
                *a += yr * xc;
            }
        }
    }

    /// True when the stored buffer length matches `rows * cols` and every
    /// entry is finite. Used to validate deserialized checkpoints.
    pub fn is_consistent(&self) -> bool {
        self.data.len() == self.rows * self.cols && self.data.iter().all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matvec_matches_hand_computation() {
        let a = Matrix::from_fn(2, 3, |r, c| (r * 3 + c) as f64); // [[0,1,2],[3,4,5]]
        let y = a.matvec(&[1.0, 2.0, 3.0]);
        assert_eq!(y, vec![8.0, 26.0]);
    }

    #[test]
    fn transpose_matvec_accumulates() {
        let a = Matrix::from_fn(2, 3, |r, c| (r * 3 + c) as f64);
        let mut out = vec![1.0, 1.0, 1.0];
        a.transpose_matvec_acc(&[1.0, 2.0], &mut out);
        // A^T [1,2] = [6, 9, 12], plus the initial ones.
        assert_eq!(out, vec![7.0, 10.0, 13.0]);
    }

    #[test]
    fn add_outer_is_rank_one() {
        let mut a = Matrix::zeros(2, 2);
        a.add_outer(&[1.0, 2.0], &[3.0, 4.0]);
        assert_eq!(a.as_slice(), &[3.0, 4.0, 6.0, 8.0]);
    }

    #[test]
    fn consistency_flags_bad_buffer() {
        let mut a = Matrix::zeros(2, 2);
        assert!(a.is_consistent());
        a.data.pop();
        assert!(!a.is_consistent());
    }
}
