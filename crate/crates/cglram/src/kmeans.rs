//! Lloyd's K-means on vectorized matrices.
//!
//! Samples are flattened by column-major concatenation, centroids are
//! arithmetic means, and assignment ties break toward the lowest cluster
//! index so a fixed seed gives a fixed result.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::glram::IterationConfig;
use crate::matrix::Matrix;
use crate::stack::MatrixStack;

/// A converged (or iteration-capped) Lloyd clustering.
#[derive(Debug, Clone, PartialEq)]
pub struct VClustering {
    clusters: usize,
    centroids: Vec<Vec<f64>>,
    assignment: Vec<usize>,
    sse_history: Vec<f64>,
}

impl VClustering {
    pub fn clusters(&self) -> usize {
        self.clusters
    }

    /// Mean vectors, length r·c each, column-major like `vectorize`.
    pub fn centroids(&self) -> &[Vec<f64>] {
        &self.centroids
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn sse_history(&self) -> &[f64] {
        &self.sse_history
    }

    pub fn sse(&self) -> f64 {
        *self.sse_history.last().expect("at least one iteration")
    }
}

/// Flatten a matrix by sequentially concatenating its columns.
pub fn vectorize(a: &Matrix) -> Vec<f64> {
    let mut v = Vec::with_capacity(a.rows() * a.cols());
    for j in 0..a.cols() {
        for i in 0..a.rows() {
            v.push(a.get(i, j));
        }
    }
    v
}

fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Lloyd iteration: seeded sample-as-centroid init, assign by Euclidean
/// distance (ties to the lowest index), recompute means, stop when the
/// assignment is a fixed point or `cfg.max_iters` is hit. `cfg.rel_tol` is
/// not used; the fixed-point test is the convergence criterion.
pub fn kmeans_fit(
    stack: &MatrixStack,
    clusters: usize,
    seed: u64,
    cfg: &IterationConfig,
) -> Result<VClustering> {
    let n = stack.len();
    if n == 0 {
        return Err(Error::EmptyStack);
    }
    if clusters == 0 {
        return Err(Error::InvalidConfig("cluster count must be at least 1".into()));
    }
    if clusters > n {
        return Err(Error::TooManyClusters {
            clusters,
            samples: n,
        });
    }
    if cfg.max_iters < 1 {
        return Err(Error::InvalidConfig("max_iters must be at least 1".into()));
    }

    let data: Vec<Vec<f64>> = stack.samples().iter().map(vectorize).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chosen = rand::seq::index::sample(&mut rng, n, clusters);
    let mut centroids: Vec<Vec<f64>> = chosen.iter().map(|i| data[i].clone()).collect();

    let mut assignment: Vec<usize> = vec![usize::MAX; n];
    let mut sse_history = Vec::new();

    for _iter in 0..cfg.max_iters {
        let mut next: Vec<usize> = data
            .iter()
            .map(|x| nearest_centroid(x, &centroids))
            .collect();

        repair_empty_clusters(&data, &centroids, &mut next, clusters);

        // Means of the (repaired) assignment.
        let mut sums = vec![vec![0.0; data[0].len()]; clusters];
        let mut counts = vec![0usize; clusters];
        for (x, &a) in data.iter().zip(&next) {
            counts[a] += 1;
            for (s, v) in sums[a].iter_mut().zip(x) {
                *s += v;
            }
        }
        for (c, (sum, count)) in centroids.iter_mut().zip(sums.iter().zip(&counts)) {
            debug_assert!(*count > 0);
            *c = sum.iter().map(|s| s / *count as f64).collect();
        }

        let sse: f64 = data
            .iter()
            .zip(&next)
            .map(|(x, &a)| dist_sq(x, &centroids[a]))
            .sum();
        sse_history.push(sse);

        let fixed_point = next == assignment;
        assignment = next;
        if fixed_point {
            break;
        }
    }

    Ok(VClustering {
        clusters,
        centroids,
        assignment,
        sse_history,
    })
}

fn nearest_centroid(x: &[f64], centroids: &[Vec<f64>]) -> usize {
    let mut best = 0usize;
    let mut best_d = f64::INFINITY;
    for (j, c) in centroids.iter().enumerate() {
        let d = dist_sq(x, c);
        if d < best_d {
            best_d = d;
            best = j;
        }
    }
    best
}

/// Refill each empty cluster with the sample farthest from its current
/// centroid, drawn only from clusters that keep at least one member.
fn repair_empty_clusters(
    data: &[Vec<f64>],
    centroids: &[Vec<f64>],
    assignment: &mut [usize],
    clusters: usize,
) {
    let mut counts = vec![0usize; clusters];
    for &a in assignment.iter() {
        counts[a] += 1;
    }
    for empty in 0..clusters {
        if counts[empty] > 0 {
            continue;
        }
        let mut donor: Option<(usize, f64)> = None;
        for (i, x) in data.iter().enumerate() {
            if counts[assignment[i]] <= 1 {
                continue;
            }
            let d = dist_sq(x, &centroids[assignment[i]]);
            let better = match donor {
                None => true,
                Some((_, best)) => d > best,
            };
            if better {
                donor = Some((i, d));
            }
        }
        let (i, _) = donor.expect("a donor cluster with more than one member exists");
        counts[assignment[i]] -= 1;
        counts[empty] += 1;
        assignment[i] = empty;
    }
}

/// Total, within-cluster, and between-cluster sums of squares about the
/// global mean: returns (SST, SSE, SSB) with SST = SSE + SSB.
pub fn variance_decomposition(
    stack: &MatrixStack,
    clustering: &VClustering,
) -> Result<(f64, f64, f64)> {
    let n = stack.len();
    if clustering.assignment.len() != n {
        return Err(Error::ShapeMismatch {
            context: format!(
                "assignment covers {} samples, stack has {n}",
                clustering.assignment.len()
            ),
        });
    }
    let dim = stack.rows() * stack.cols();
    if clustering.centroids.iter().any(|c| c.len() != dim) {
        return Err(Error::ShapeMismatch {
            context: "centroid dimension does not match the stack".into(),
        });
    }

    let data: Vec<Vec<f64>> = stack.samples().iter().map(vectorize).collect();
    let mut mean = vec![0.0; dim];
    for x in &data {
        for (m, v) in mean.iter_mut().zip(x) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }

    let sst: f64 = data.iter().map(|x| dist_sq(x, &mean)).sum();
    let sse: f64 = data
        .iter()
        .zip(&clustering.assignment)
        .map(|(x, &a)| dist_sq(x, &clustering.centroids[a]))
        .sum();
    let mut counts = vec![0usize; clustering.clusters];
    for &a in &clustering.assignment {
        counts[a] += 1;
    }
    let ssb: f64 = clustering
        .centroids
        .iter()
        .zip(&counts)
        .map(|(c, &count)| count as f64 * dist_sq(c, &mean))
        .sum();

    Ok((sst, sse, ssb))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn scalar_stack(values: &[f64]) -> MatrixStack {
        MatrixStack::new(
            values
                .iter()
                .map(|&v| Matrix::from_vec(1, 1, vec![v]).unwrap())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn forced_optimum_on_line_fixture() {
        let stack = scalar_stack(&[0.0, 1.0, 10.0, 11.0]);
        let res = kmeans_fit(&stack, 2, 3, &IterationConfig::default()).unwrap();
        // Clusters {0,1} and {10,11} up to relabeling.
        assert_eq!(res.assignment()[0], res.assignment()[1]);
        assert_eq!(res.assignment()[2], res.assignment()[3]);
        assert_ne!(res.assignment()[0], res.assignment()[2]);
        let mut means: Vec<f64> = res.centroids().iter().map(|c| c[0]).collect();
        means.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((means[0] - 0.5).abs() < 1e-12);
        assert!((means[1] - 10.5).abs() < 1e-12);
        assert!((res.sse() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn one_cluster_per_sample_has_zero_sse() {
        let stack = scalar_stack(&[1.0, 2.0, 5.0, -3.0]);
        let res = kmeans_fit(&stack, 4, 0, &IterationConfig::default()).unwrap();
        assert!(res.sse() < 1e-12);
        let mut sorted = res.assignment().to_vec();
        sorted.sort_unstable();
        assert_eq!(sorted, vec![0, 1, 2, 3]);
    }

    #[test]
    fn recovers_separated_blobs() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut samples = Vec::new();
        let mut labels = Vec::new();
        for (label, center) in [(0u32, -10.0), (1u32, 10.0)] {
            for _ in 0..20 {
                let x = center + rng.sample::<f64, _>(StandardNormal);
                let y = center + rng.sample::<f64, _>(StandardNormal);
                samples.push(Matrix::from_vec(2, 1, vec![x, y]).unwrap());
                labels.push(label);
            }
        }
        let stack = MatrixStack::new(samples).unwrap().with_labels(labels).unwrap();
        let res = kmeans_fit(&stack, 2, 1, &IterationConfig::default()).unwrap();
        let truth = stack.labels().unwrap();
        let direct = truth
            .iter()
            .zip(res.assignment())
            .filter(|(t, a)| **t as usize == **a)
            .count();
        let flipped = truth
            .iter()
            .zip(res.assignment())
            .filter(|(t, a)| **t as usize != **a)
            .count();
        assert_eq!(direct.max(flipped), stack.len());
    }

    #[test]
    fn sse_history_is_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let samples: Vec<Matrix> = (0..30)
            .map(|_| {
                Matrix::from_vec(3, 2, (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
            })
            .collect();
        let stack = MatrixStack::new(samples).unwrap();
        for seed in 0..5 {
            let res = kmeans_fit(&stack, 4, seed, &IterationConfig::default()).unwrap();
            for w in res.sse_history().windows(2) {
                assert!(w[1] <= w[0] + 1e-9, "SSE rose: {w:?}");
            }
        }
    }

    #[test]
    fn variance_decomposition_fixture() {
        let stack = scalar_stack(&[0.0, 1.0, 10.0, 11.0]);
        let res = kmeans_fit(&stack, 2, 3, &IterationConfig::default()).unwrap();
        let (sst, sse, ssb) = variance_decomposition(&stack, &res).unwrap();
        assert!((sst - 101.0).abs() < 1e-12);
        assert!((sse - 1.0).abs() < 1e-12);
        assert!((ssb - 100.0).abs() < 1e-12);
    }

    #[test]
    fn single_cluster_means_sst_equals_sse() {
        let stack = scalar_stack(&[2.0, 4.0, 9.0]);
        let res = kmeans_fit(&stack, 1, 0, &IterationConfig::default()).unwrap();
        let (sst, sse, ssb) = variance_decomposition(&stack, &res).unwrap();
        assert!(ssb.abs() < 1e-12);
        assert!((sst - sse).abs() < 1e-12);
    }

    #[test]
    fn decomposition_identity_on_random_blobs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let samples: Vec<Matrix> = (0..40)
            .map(|_| {
                Matrix::from_vec(2, 2, (0..4).map(|_| rng.gen_range(-5.0..5.0)).collect()).unwrap()
            })
            .collect();
        let stack = MatrixStack::new(samples).unwrap();
        for clusters in [1, 3, 7] {
            let res = kmeans_fit(&stack, clusters, 9, &IterationConfig::default()).unwrap();
            let (sst, sse, ssb) = variance_decomposition(&stack, &res).unwrap();
            assert!((sst - sse - ssb).abs() / sst < 1e-10);
        }
    }

    #[test]
    fn mean_minimizes_within_cluster_scatter() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let points: Vec<Vec<f64>> = (0..15)
            .map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let mut mean = vec![0.0; 3];
        for p in &points {
            for (m, v) in mean.iter_mut().zip(p) {
                *m += v / points.len() as f64;
            }
        }
        let at_mean: f64 = points.iter().map(|p| dist_sq(p, &mean)).sum();
        for _ in 0..20 {
            let perturbed: Vec<f64> = mean
                .iter()
                .map(|m| m + rng.gen_range(-0.5..0.5))
                .collect();
            let at_perturbed: f64 = points.iter().map(|p| dist_sq(p, &perturbed)).sum();
            assert!(at_perturbed >= at_mean - 1e-12);
        }
    }

    #[test]
    fn assignment_is_a_partition() {
        let stack = scalar_stack(&[0.0, 0.1, 0.2, 5.0, 5.1]);
        let res = kmeans_fit(&stack, 2, 0, &IterationConfig::default()).unwrap();
        assert_eq!(res.assignment().len(), stack.len());
        assert!(res.assignment().iter().all(|&a| a < 2));
        // Centroids equal the member means at termination.
        for j in 0..2 {
            let members: Vec<f64> = res
                .assignment()
                .iter()
                .enumerate()
                .filter(|(_, &a)| a == j)
                .map(|(i, _)| stack.sample(i).get(0, 0))
                .collect();
            let mean = members.iter().sum::<f64>() / members.len() as f64;
            assert!((res.centroids()[j][0] - mean).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_too_many_clusters() {
        let stack = scalar_stack(&[1.0, 2.0]);
        assert!(matches!(
            kmeans_fit(&stack, 3, 0, &IterationConfig::default()),
            Err(Error::TooManyClusters { .. })
        ));
    }
}
