//! Ordered collections of same-shape sample matrices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// N real r×c sample matrices with an optional ground-truth label per sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixStack {
    rows: usize,
    cols: usize,
    samples: Vec<Matrix>,
    labels: Option<Vec<u32>>,
}

impl MatrixStack {
    /// Build a stack from at least one sample; all samples must share a shape.
    pub fn new(samples: Vec<Matrix>) -> Result<Self> {
        let first = samples.first().ok_or(Error::EmptyStack)?;
        let (rows, cols) = (first.rows(), first.cols());
        for (i, s) in samples.iter().enumerate() {
            if s.rows() != rows || s.cols() != cols {
                return Err(Error::ShapeMismatch {
                    context: format!(
                        "sample {i} is {}x{}, expected {rows}x{cols}",
                        s.rows(),
                        s.cols()
                    ),
                });
            }
        }
        Ok(Self {
            rows,
            cols,
            samples,
            labels: None,
        })
    }

    /// Attach ground-truth labels; the vector length must match the stack.
    pub fn with_labels(mut self, labels: Vec<u32>) -> Result<Self> {
        if labels.len() != self.samples.len() {
            return Err(Error::ShapeMismatch {
                context: format!(
                    "{} labels for {} samples",
                    labels.len(),
                    self.samples.len()
                ),
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
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
    pub fn samples(&self) -> &[Matrix] {
        &self.samples
    }

    #[inline]
    pub fn sample(&self, i: usize) -> &Matrix {
        &self.samples[i]
    }

    pub fn labels(&self) -> Option<&[u32]> {
        self.labels.as_deref()
    }

    /// Σ ‖A_i‖_F² over the whole stack.
    pub fn total_norm_sq(&self) -> f64 {
        self.samples.iter().map(Matrix::frobenius_norm_sq).sum()
    }

    /// Largest rank a shared two-sided projection can use: min(r, c).
    pub fn max_rank(&self) -> usize {
        self.rows.min(self.cols)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty() {
        assert!(matches!(MatrixStack::new(vec![]), Err(Error::EmptyStack)));
    }

    #[test]
    fn rejects_ragged_samples() {
        let a = Matrix::zeros(2, 2);
        let b = Matrix::zeros(2, 3);
        assert!(MatrixStack::new(vec![a, b]).is_err());
    }

    #[test]
    fn label_length_checked() {
        let stack = MatrixStack::new(vec![Matrix::zeros(2, 2); 3]).unwrap();
        assert!(stack.clone().with_labels(vec![0, 1]).is_err());
        assert!(stack.with_labels(vec![0, 1, 2]).is_ok());
    }
}
