//! Dense row-major matrices over f64 with Frobenius-norm helpers.
//!
//! Entries are validated to be finite at construction, so downstream
//! numerics never see NaN or infinities.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A dense real matrix stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl Matrix {
    /// Build a matrix from row-major entries. Rejects dimension/length
    /// mismatches and non-finite values.
    pub fn from_vec(rows: usize, cols: usize, entries: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::ShapeMismatch {
                context: format!("matrix dimensions must be positive, got {rows}x{cols}"),
            });
        }
        if entries.len() != rows * cols {
            return Err(Error::ShapeMismatch {
                context: format!(
                    "{rows}x{cols} matrix needs {} entries, got {}",
                    rows * cols,
                    entries.len()
                ),
            });
        }
        if !entries.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("matrix entries"));
        }
        Ok(Self { rows, cols, entries })
    }

    /// Build a matrix from slices of rows; every row must share a length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map(|row| row.len()).unwrap_or(0);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::ShapeMismatch {
                context: "ragged rows".to_string(),
            });
        }
        Self::from_vec(r, c, rows.concat())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.entries[i * n + i] = 1.0;
        }
        m
    }

    /// First `k` columns of the n×n identity.
    pub fn identity_top(n: usize, k: usize) -> Self {
        let mut m = Self::zeros(n, k);
        for j in 0..k.min(n) {
            m.entries[j * k + j] = 1.0;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.rows && j < self.cols);
        self.entries[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.rows && j < self.cols);
        self.entries[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.entries[j * self.rows + i] = self.entries[i * self.cols + j];
            }
        }
        out
    }

    /// `self * rhs`. Panics on inner-dimension mismatch; public operations
    /// validate shapes before reaching this.
    pub fn matmul(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(
            self.cols, rhs.rows,
            "matmul inner dimensions {}x{} vs {}x{}",
            self.rows, self.cols, rhs.rows, rhs.cols
        );
        let (m, inner, n) = (self.rows, self.cols, rhs.cols);
        let mut out = Matrix::zeros(m, n);
        for i in 0..m {
            let arow = &self.entries[i * inner..(i + 1) * inner];
            let orow = &mut out.entries[i * n..(i + 1) * n];
            for (kk, &aik) in arow.iter().enumerate() {
                if aik != 0.0 {
                    let brow = &rhs.entries[kk * n..(kk + 1) * n];
                    for (o, &b) in orow.iter_mut().zip(brow) {
                        *o += aik * b;
                    }
                }
            }
        }
        out
    }

    /// `selfᵀ * rhs` without materializing the transpose.
    pub fn transpose_matmul(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.rows, rhs.rows, "transpose_matmul row mismatch");
        let (m, inner, n) = (self.cols, self.rows, rhs.cols);
        let mut out = Matrix::zeros(m, n);
        for kk in 0..inner {
            let arow = &self.entries[kk * m..(kk + 1) * m];
            let brow = &rhs.entries[kk * n..(kk + 1) * n];
            for (i, &aki) in arow.iter().enumerate() {
                if aki != 0.0 {
                    let orow = &mut out.entries[i * n..(i + 1) * n];
                    for (o, &b) in orow.iter_mut().zip(brow) {
                        *o += aki * b;
                    }
                }
            }
        }
        out
    }

    pub fn sub(&self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "sub shape mismatch");
        let entries = self
            .entries
            .iter()
            .zip(&rhs.entries)
            .map(|(a, b)| a - b)
            .collect();
        Matrix {
            rows: self.rows,
            cols: self.cols,
            entries,
        }
    }

    pub fn add_assign(&mut self, rhs: &Matrix) {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "add shape mismatch");
        for (a, b) in self.entries.iter_mut().zip(&rhs.entries) {
            *a += b;
        }
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|v| v * s).collect(),
        }
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.entries.iter().map(|v| v * v).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|v| v.is_finite())
    }

    /// Max |a_ij - b_ij| over all entries.
    pub fn max_abs_diff(&self, rhs: &Matrix) -> f64 {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        self.entries
            .iter()
            .zip(&rhs.entries)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Frobenius norm sqrt(Σ a_ij²); zero iff the matrix is zero.
pub fn frobenius_norm(a: &Matrix) -> f64 {
    a.frobenius_norm_sq().sqrt()
}
