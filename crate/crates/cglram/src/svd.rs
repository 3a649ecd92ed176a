//! Full singular value decomposition via one-sided Jacobi, and the rank-k
//! truncation error it induces.
//!
//! One-sided Jacobi orthogonalizes the columns of a working copy of A with
//! plane rotations; the rotations accumulate into V, the column norms are
//! the singular values, and the normalized columns form U. Singular values
//! come out with high relative accuracy, which keeps truncation-error tails
//! trustworthy even when they are tiny.

use crate::error::{Error, Result};
use crate::matrix::Matrix;

const MAX_SWEEPS: usize = 60;

/// Thin SVD: A = U · diag(σ) · Vᵀ with min(rows, cols) singular values.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdResult {
    /// rows × p, column-orthonormal.
    pub u: Matrix,
    /// Non-negative, non-increasing; p = min(rows, cols).
    pub singular_values: Vec<f64>,
    /// cols × p, column-orthonormal.
    pub v: Matrix,
}

impl SvdResult {
    /// Reconstruct U · diag(σ) · Vᵀ.
    pub fn reconstruct(&self) -> Matrix {
        let p = self.singular_values.len();
        let mut scaled = self.u.clone();
        for j in 0..p {
            for i in 0..scaled.rows() {
                let x = scaled.get(i, j);
                scaled.set(i, j, x * self.singular_values[j]);
            }
        }
        scaled.matmul(&self.v.transpose())
    }
}

/// Full (thin) SVD of a dense matrix.
pub fn full_svd(a: &Matrix) -> Result<SvdResult> {
    if !a.is_finite() {
        return Err(Error::NonFinite("svd input"));
    }
    if a.rows() >= a.cols() {
        svd_tall(a)
    } else {
        let res = svd_tall(&a.transpose())?;
        Ok(SvdResult {
            u: res.v,
            singular_values: res.singular_values,
            v: res.u,
        })
    }
}

/// One-sided Jacobi on a tall (m ≥ n) matrix, operating on column vectors.
fn svd_tall(a: &Matrix) -> Result<SvdResult> {
    let m = a.rows();
    let n = a.cols();

    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| a.column(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();

    let eps = 1e-14;
    let mut converged = false;
    for _sweep in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n.saturating_sub(1) {
            for q in p + 1..n {
                let (alpha, beta, gamma) = {
                    let (cp, cq) = (&cols[p], &cols[q]);
                    let mut alpha = 0.0;
                    let mut beta = 0.0;
                    let mut gamma = 0.0;
                    for i in 0..m {
                        alpha += cp[i] * cp[i];
                        beta += cq[i] * cq[i];
                        gamma += cp[i] * cq[i];
                    }
                    (alpha, beta, gamma)
                };
                if gamma * gamma <= eps * eps * alpha * beta {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = if zeta >= 0.0 {
                    1.0 / (zeta + (1.0 + zeta * zeta).sqrt())
                } else {
                    -1.0 / (-zeta + (1.0 + zeta * zeta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;

                let (left, right) = cols.split_at_mut(q);
                let cp = &mut left[p];
                let cq = &mut right[0];
                for i in 0..m {
                    let x = cp[i];
                    let y = cq[i];
                    cp[i] = c * x - s * y;
                    cq[i] = s * x + c * y;
                }
                let (vleft, vright) = v.split_at_mut(q);
                let vp = &mut vleft[p];
                let vq = &mut vright[0];
                for i in 0..n {
                    let x = vp[i];
                    let y = vq[i];
                    vp[i] = c * x - s * y;
                    vq[i] = s * x + c * y;
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged && n > 1 {
        return Err(Error::ConvergenceFailure { limit: MAX_SWEEPS });
    }

    // Column norms are the singular values; sort descending (stable).
    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = cols
        .iter()
        .map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap());

    let sigma_max = order.first().map(|&i| norms[i]).unwrap_or(0.0);
    let null_cutoff = sigma_max * 1e-13;

    let mut u = Matrix::zeros(m, n);
    let mut vm = Matrix::zeros(n, n);
    let mut singular_values = Vec::with_capacity(n);
    let mut null_columns = Vec::new();
    for (dst, &src) in order.iter().enumerate() {
        singular_values.push(norms[src]);
        for (i, &value) in v[src].iter().enumerate() {
            vm.set(i, dst, value);
        }
        if norms[src] > null_cutoff && norms[src] > 0.0 {
            for (i, &value) in cols[src].iter().enumerate() {
                u.set(i, dst, value / norms[src]);
            }
        } else {
            null_columns.push(dst);
        }
    }

    // Numerically null columns of U get a deterministic orthonormal
    // completion; they carry (near-)zero weight in the reconstruction.
    for &dst in &null_columns {
        complete_column(&mut u, dst);
    }

    // Deterministic signs: largest-magnitude entry of each U column
    // positive, with the paired V column flipped alongside.
    for j in 0..n {
        let mut best = 0usize;
        let mut best_abs = 0.0f64;
        for i in 0..m {
            let a_ = u.get(i, j).abs();
            if a_ > best_abs {
                best_abs = a_;
                best = i;
            }
        }
        if u.get(best, j) < 0.0 {
            for i in 0..m {
                let x = u.get(i, j);
                u.set(i, j, -x);
            }
            for i in 0..n {
                let x = vm.get(i, j);
                vm.set(i, j, -x);
            }
        }
    }

    Ok(SvdResult {
        u,
        singular_values,
        v: vm,
    })
}

/// Fill column `dst` of `u` with a unit vector orthogonal to every other
/// non-empty column, scanning standard basis vectors in order.
fn complete_column(u: &mut Matrix, dst: usize) {
    let m = u.rows();
    for basis in 0..m {
        let mut cand = vec![0.0; m];
        cand[basis] = 1.0;
        // Two Gram-Schmidt passes for stability.
        for _ in 0..2 {
            for j in 0..u.cols() {
                if j == dst {
                    continue;
                }
                let dot: f64 = (0..m).map(|i| cand[i] * u.get(i, j)).sum();
                for (i, c) in cand.iter_mut().enumerate() {
                    *c -= dot * u.get(i, j);
                }
            }
        }
        let norm: f64 = cand.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.5 {
            for (i, &c) in cand.iter().enumerate() {
                u.set(i, dst, c / norm);
            }
            return;
        }
    }
    // Unreachable for m ≥ cols: some basis vector always survives.
    panic!("orthonormal completion failed");
}

/// ‖A − A_k‖_F for the rank-k TSVD truncation A_k, i.e. sqrt(Σ_{j>k} σ_j²).
pub fn tsvd_error(a: &Matrix, k: usize) -> Result<f64> {
    let max = a.rows().min(a.cols());
    if k == 0 || k > max {
        return Err(Error::RankOutOfRange { k, max });
    }
    let svd = full_svd(a)?;
    Ok(svd.singular_values[k..]
        .iter()
        .map(|s| s * s)
        .sum::<f64>()
        .sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::orthonormality_defect;
    use crate::matrix::frobenius_norm;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix {
        Matrix::from_vec(r, c, (0..r * c).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn diagonal_singular_values() {
        let mut a = Matrix::zeros(3, 3);
        a.set(0, 0, 3.0);
        a.set(1, 1, 2.0);
        a.set(2, 2, 1.0);
        let svd = full_svd(&a).unwrap();
        assert!((svd.singular_values[0] - 3.0).abs() < 1e-12);
        assert!((svd.singular_values[1] - 2.0).abs() < 1e-12);
        assert!((svd.singular_values[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rank_one_spectrum() {
        // u, v unit vectors; A = u vᵀ has σ = (1, 0, 0, 0).
        let u = [0.5, 0.5, 0.5, 0.5];
        let v = [0.6, 0.8, 0.0, 0.0];
        let entries: Vec<f64> = u
            .iter()
            .flat_map(|&ui| v.iter().map(move |&vj| ui * vj))
            .collect();
        let a = Matrix::from_vec(4, 4, entries).unwrap();
        let svd = full_svd(&a).unwrap();
        assert!((svd.singular_values[0] - 1.0).abs() < 1e-10);
        for s in &svd.singular_values[1..] {
            assert!(s.abs() < 1e-10);
        }
        assert!(orthonormality_defect(&svd.u) < 1e-10);
        assert!(orthonormality_defect(&svd.v) < 1e-10);
    }

    #[test]
    fn random_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let a = random_matrix(&mut rng, 5, 4);
            let svd = full_svd(&a).unwrap();
            assert_eq!(svd.singular_values.len(), 4);
            let rel = frobenius_norm(&a.sub(&svd.reconstruct())) / frobenius_norm(&a);
            assert!(rel < 1e-10, "relative residual {rel}");
            assert!(orthonormality_defect(&svd.u) < 1e-10);
            assert!(orthonormality_defect(&svd.v) < 1e-10);
        }
    }

    #[test]
    fn wide_matrices_transpose_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random_matrix(&mut rng, 3, 6);
        let svd = full_svd(&a).unwrap();
        assert_eq!(svd.singular_values.len(), 3);
        let rel = frobenius_norm(&a.sub(&svd.reconstruct())) / frobenius_norm(&a);
        assert!(rel < 1e-10);
    }

    #[test]
    fn singular_values_match_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let a = random_matrix(&mut rng, 6, 5);
            let mine = full_svd(&a).unwrap().singular_values;
            let na = nalgebra::DMatrix::from_fn(6, 5, |i, j| a.get(i, j));
            let mut oracle: Vec<f64> = na.svd(false, false).singular_values.iter().copied().collect();
            oracle.sort_by(|x, y| y.partial_cmp(x).unwrap());
            for (m, o) in mine.iter().zip(&oracle) {
                assert!((m - o).abs() < 1e-10, "{m} vs {o}");
            }
        }
    }

    #[test]
    fn tsvd_discards_trailing_sigma() {
        let mut a = Matrix::zeros(3, 3);
        a.set(0, 0, 3.0);
        a.set(1, 1, 2.0);
        a.set(2, 2, 1.0);
        assert!((tsvd_error(&a, 2).unwrap() - 1.0).abs() < 1e-12);
        assert!(tsvd_error(&a, 3).unwrap() < 1e-10);
    }

    #[test]
    fn tsvd_matches_explicit_truncation() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let a = random_matrix(&mut rng, 6, 5);
        let k = 2;
        let svd = full_svd(&a).unwrap();
        // Brute-force route: zero the tail and measure the residual.
        let mut truncated = SvdResult {
            u: svd.u.clone(),
            singular_values: svd.singular_values.clone(),
            v: svd.v.clone(),
        };
        for s in truncated.singular_values.iter_mut().skip(k) {
            *s = 0.0;
        }
        let direct = frobenius_norm(&a.sub(&truncated.reconstruct()));
        let formula = tsvd_error(&a, k).unwrap();
        assert!((direct - formula).abs() < 1e-10);
    }

    #[test]
    fn tsvd_rank_bounds() {
        let a = Matrix::identity(3);
        assert!(matches!(
            tsvd_error(&a, 0),
            Err(Error::RankOutOfRange { .. })
        ));
        assert!(matches!(
            tsvd_error(&a, 4),
            Err(Error::RankOutOfRange { .. })
        ));
    }

    #[test]
    fn zero_matrix_svd() {
        let a = Matrix::zeros(4, 3);
        let svd = full_svd(&a).unwrap();
        assert!(svd.singular_values.iter().all(|&s| s == 0.0));
        assert!(orthonormality_defect(&svd.u) < 1e-12);
    }
}
