//! Symmetric eigendecomposition via the cyclic Jacobi rotation method.
//!
//! Jacobi is slower asymptotically than tridiagonalization + QR but it is
//! simple, unconditionally stable, and computes small dense spectra to
//! machine precision, which is what the Gram matrices produced by the
//! alternating fits need.

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Sweeps are quadratically convergent; well-conditioned inputs settle in
/// well under ten.
const MAX_SWEEPS: usize = 100;

/// Top-k eigenpairs of a symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenResult {
    /// Eigenvalues, non-increasing.
    pub values: Vec<f64>,
    /// n×k matrix whose j-th column pairs with `values[j]`.
    pub vectors: Matrix,
}

/// Largest-k eigenpairs of a symmetric matrix.
///
/// The input is symmetrized as (S + Sᵀ)/2 before factorization, so tiny
/// floating-point asymmetries accumulated by Gram sums are harmless.
/// Each returned eigenvector is sign-fixed so that its largest-magnitude
/// entry is positive (first such entry on ties), which makes the result
/// bitwise deterministic.
pub fn top_k_eigs_sym(s: &Matrix, k: usize) -> Result<EigenResult> {
    let n = s.rows();
    if s.rows() != s.cols() {
        return Err(Error::NonSquare {
            rows: s.rows(),
            cols: s.cols(),
        });
    }
    if k == 0 || k > n {
        return Err(Error::RankOutOfRange { k, max: n });
    }
    if !s.is_finite() {
        return Err(Error::NonFinite("eigendecomposition input"));
    }

    // Symmetrize, then run Jacobi sweeps on a dense working copy.
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            a[i * n + j] = 0.5 * (s.get(i, j) + s.get(j, i));
        }
    }
    let mut v = Matrix::identity(n);

    let frob_sq: f64 = a.iter().map(|x| x * x).sum();
    let tol_sq = frob_sq * 1e-30 + f64::MIN_POSITIVE;

    for _sweep in 0..MAX_SWEEPS {
        let off_sq: f64 = (0..n)
            .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
            .map(|(p, q)| {
                let x = a[p * n + q];
                2.0 * x * x
            })
            .sum();
        if off_sq <= tol_sq {
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                // Rotation angle from the standard Jacobi formulas.
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s_ = t * c;

                // Update rows/columns p and q of A = Jᵀ A J.
                for i in 0..n {
                    if i != p && i != q {
                        let aip = a[i * n + p];
                        let aiq = a[i * n + q];
                        a[i * n + p] = c * aip - s_ * aiq;
                        a[p * n + i] = a[i * n + p];
                        a[i * n + q] = s_ * aip + c * aiq;
                        a[q * n + i] = a[i * n + q];
                    }
                }
                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;

                // Accumulate V = V J.
                for i in 0..n {
                    let vip = v.get(i, p);
                    let viq = v.get(i, q);
                    v.set(i, p, c * vip - s_ * viq);
                    v.set(i, q, s_ * vip + c * viq);
                }
            }
        }
    }

    // Sort eigenpairs by value, descending; stable so ties keep Jacobi order.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j * n + j].partial_cmp(&a[i * n + i]).unwrap());

    let values: Vec<f64> = order.iter().take(k).map(|&i| a[i * n + i]).collect();
    let mut vectors = Matrix::zeros(n, k);
    for (col, &src) in order.iter().take(k).enumerate() {
        for i in 0..n {
            vectors.set(i, col, v.get(i, src));
        }
    }
    fix_column_signs(&mut vectors);

    Ok(EigenResult { values, vectors })
}

/// Flip each column so its largest-magnitude entry is positive; on ties the
/// first maximal entry decides.
pub(crate) fn fix_column_signs(m: &mut Matrix) {
    for j in 0..m.cols() {
        let mut best = 0usize;
        let mut best_abs = 0.0f64;
        for i in 0..m.rows() {
            let a = m.get(i, j).abs();
            if a > best_abs {
                best_abs = a;
                best = i;
            }
        }
        if m.get(best, j) < 0.0 {
            for i in 0..m.rows() {
                let x = m.get(i, j);
                m.set(i, j, -x);
            }
        }
    }
}

/// Max |(VᵀV - I)_ij|, used by tests and invariant checks.
pub fn orthonormality_defect(v: &Matrix) -> f64 {
    let gram = v.transpose_matmul(v);
    let mut worst = 0.0f64;
    for i in 0..gram.rows() {
        for j in 0..gram.cols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram.get(i, j) - target).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn diag(values: &[f64]) -> Matrix {
        let n = values.len();
        let mut m = Matrix::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    #[test]
    fn diagonal_top_one() {
        let res = top_k_eigs_sym(&diag(&[5.0, 2.0, 1.0]), 1).unwrap();
        assert!((res.values[0] - 5.0).abs() < 1e-12);
        let v = res.vectors.column(0);
        assert!((v[0] - 1.0).abs() < 1e-12 && v[1].abs() < 1e-12 && v[2].abs() < 1e-12);
    }

    #[test]
    fn two_by_two_analytic() {
        let s = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let res = top_k_eigs_sym(&s, 2).unwrap();
        assert!((res.values[0] - 3.0).abs() < 1e-12);
        assert!((res.values[1] - 1.0).abs() < 1e-12);
        let inv_sqrt2 = 1.0 / 2.0_f64.sqrt();
        let v0 = res.vectors.column(0);
        let v1 = res.vectors.column(1);
        assert!((v0[0] - inv_sqrt2).abs() < 1e-12 && (v0[1] - inv_sqrt2).abs() < 1e-12);
        // Tied magnitudes: the first maximal entry is made positive.
        assert!((v1[0] - inv_sqrt2).abs() < 1e-12 && (v1[1] + inv_sqrt2).abs() < 1e-12);
    }

    #[test]
    fn random_symmetric_matches_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..20 {
            let n = 6;
            let mut s = Matrix::zeros(n, n);
            for i in 0..n {
                for j in i..n {
                    let x = rng.gen_range(-1.0..1.0);
                    s.set(i, j, x);
                    s.set(j, i, x);
                }
            }
            let res = top_k_eigs_sym(&s, 3).unwrap();

            let na = nalgebra::DMatrix::from_fn(n, n, |i, j| s.get(i, j));
            let eig = na.symmetric_eigen();
            let mut oracle: Vec<f64> = eig.eigenvalues.iter().copied().collect();
            oracle.sort_by(|a, b| b.partial_cmp(a).unwrap());
            for (mine, want) in res.values.iter().zip(&oracle) {
                assert!((mine - want).abs() < 1e-9, "{mine} vs {want}");
            }
            // Residual check ties vectors to values: ‖S v − λ v‖ small.
            for j in 0..3 {
                let v = res.vectors.column(j);
                for i in 0..n {
                    let sv: f64 = (0..n).map(|l| s.get(i, l) * v[l]).sum();
                    assert!((sv - res.values[j] * v[i]).abs() < 1e-9);
                }
            }
            assert!(orthonormality_defect(&res.vectors) < 1e-10);
        }
    }

    #[test]
    fn deterministic_bitwise() {
        let s = Matrix::from_rows(&[
            vec![4.0, 1.0, 0.5],
            vec![1.0, 3.0, 0.25],
            vec![0.5, 0.25, 2.0],
        ])
        .unwrap();
        let a = top_k_eigs_sym(&s, 2).unwrap();
        let b = top_k_eigs_sym(&s, 2).unwrap();
        assert_eq!(a.values, b.values);
        assert_eq!(a.vectors, b.vectors);
    }

    #[test]
    fn rejects_non_square_and_bad_rank() {
        let rect = Matrix::zeros(2, 3);
        assert!(matches!(
            top_k_eigs_sym(&rect, 1),
            Err(Error::NonSquare { .. })
        ));
        let sq = Matrix::identity(3);
        assert!(matches!(
            top_k_eigs_sym(&sq, 0),
            Err(Error::RankOutOfRange { .. })
        ));
        assert!(matches!(
            top_k_eigs_sym(&sq, 4),
            Err(Error::RankOutOfRange { .. })
        ));
    }

    #[test]
    fn repeated_eigenvalues_give_orthonormal_invariant_basis() {
        // 2-dimensional eigenspace for value 2; compare subspace projectors.
        let s = diag(&[2.0, 2.0, 1.0]);
        let res = top_k_eigs_sym(&s, 2).unwrap();
        let p = res.vectors.matmul(&res.vectors.transpose());
        let want = diag(&[1.0, 1.0, 0.0]);
        assert!(p.max_abs_diff(&want) < 1e-10);
    }
}
