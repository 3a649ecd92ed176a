//! Property tests for the algebraic invariants.

use proptest::prelude::*;

use cglram::eigen::{orthonormality_defect, top_k_eigs_sym, EigenResult};
use cglram::glram::{glram_fit, IterationConfig};
use cglram::svd::{full_svd, tsvd_error};
use cglram::{Matrix, MatrixStack};

fn matrix_strategy(max_dim: usize) -> impl Strategy<Value = Matrix> {
    (2..=max_dim, 2..=max_dim).prop_flat_map(|(r, c)| {
        proptest::collection::vec(-1.0f64..1.0, r * c)
            .prop_map(move |entries| Matrix::from_vec(r, c, entries).unwrap())
    })
}

fn unit_normalized(m: &Matrix) -> Matrix {
    let norm = m.frobenius_norm_sq().sqrt();
    if norm == 0.0 {
        m.clone()
    } else {
        m.scale(1.0 / norm)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // Truncation error equals the tail of the spectrum.
    #[test]
    fn eckart_young_consistency(m in matrix_strategy(8), k_frac in 0.0f64..1.0) {
        let a = unit_normalized(&m);
        let p = a.rows().min(a.cols());
        let k = 1 + ((p - 1) as f64 * k_frac) as usize;
        let err = tsvd_error(&a, k).unwrap();
        let svd = full_svd(&a).unwrap();
        let tail = svd.singular_values[k..].iter().map(|s| s * s).sum::<f64>().sqrt();
        prop_assert!((err - tail).abs() < 1e-10);
    }

    // Singular values are the square roots of the Gram spectrum.
    #[test]
    fn eigen_svd_consistency(m in matrix_strategy(7)) {
        let a = m.scale(1.0); // ‖A‖_F ≤ sqrt(49) but entries in (-1,1): ≤ 7 < 10
        let svd = full_svd(&a).unwrap();
        let gram = a.transpose_matmul(&a);
        let EigenResult { values, .. } = top_k_eigs_sym(&gram, gram.rows()).unwrap();
        for (sigma, lambda) in svd.singular_values.iter().zip(&values) {
            let root = lambda.max(0.0).sqrt();
            prop_assert!((sigma - root).abs() < 1e-8, "σ {} vs sqrt(λ) {}", sigma, root);
        }
    }

    // Orthonormality of returned factor columns.
    #[test]
    fn factors_are_orthonormal(m in matrix_strategy(8)) {
        let svd = full_svd(&m).unwrap();
        prop_assert!(orthonormality_defect(&svd.u) < 1e-10);
        prop_assert!(orthonormality_defect(&svd.v) < 1e-10);
        let gram = m.transpose_matmul(&m);
        let eig = top_k_eigs_sym(&gram, gram.rows().min(3)).unwrap();
        prop_assert!(orthonormality_defect(&eig.vectors) < 1e-10);
    }

    // Two identical calls return bitwise-identical eigen output.
    #[test]
    fn eigensolver_is_deterministic(m in matrix_strategy(6)) {
        let gram = m.transpose_matmul(&m);
        let a = top_k_eigs_sym(&gram, 2).unwrap();
        let b = top_k_eigs_sym(&gram, 2).unwrap();
        prop_assert_eq!(a.values, b.values);
        prop_assert_eq!(a.vectors, b.vectors);
    }

    // Shared-pair error never beats the average per-matrix optimum, and the
    // energy split holds at the fitted point.
    #[test]
    fn glram_lower_bound_and_energy_split(
        seed_entries in proptest::collection::vec(-1.0f64..1.0, 3 * 5 * 4),
    ) {
        let samples: Vec<Matrix> = seed_entries
            .chunks_exact(20)
            .map(|chunk| Matrix::from_vec(5, 4, chunk.to_vec()).unwrap())
            .collect();
        let stack = MatrixStack::new(samples).unwrap();
        let k = 2;
        let (_, set, trace) = glram_fit(&stack, k, &IterationConfig::default()).unwrap();
        let final_rmsre = *trace.rmsre_history.last().unwrap();

        let tsvd_mean_sq: f64 = stack
            .samples()
            .iter()
            .map(|a| tsvd_error(a, k).unwrap().powi(2))
            .sum::<f64>() / stack.len() as f64;
        prop_assert!(final_rmsre >= tsvd_mean_sq.sqrt() - 1e-9);

        let total = stack.total_norm_sq();
        let projected: f64 = set.middles.iter().map(Matrix::frobenius_norm_sq).sum();
        let split = final_rmsre * final_rmsre * stack.len() as f64 + projected;
        prop_assert!((split - total).abs() / total.max(1e-12) < 1e-8);
    }
}
