//! Comparison baselines: per-matrix truncated SVD and the K-means→GLRAM
//! pipeline, plus the storage accounting shared by every method.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cglram::{fit_partition_once, ClusterModel};
use crate::error::{Error, Result};
use crate::glram::IterationConfig;
use crate::kmeans::kmeans_fit;
use crate::stack::MatrixStack;
use crate::svd::tsvd_error;

/// Compression methods the harness can run, in canonical report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Glram,
    KmeansGlram,
    Cglram,
    Svd,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Glram,
        Method::KmeansGlram,
        Method::Cglram,
        Method::Svd,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Glram => "glram",
            Method::KmeansGlram => "kmeans-glram",
            Method::Cglram => "cglram",
            Method::Svd => "svd",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "glram" => Ok(Method::Glram),
            "kmeans-glram" => Ok(Method::KmeansGlram),
            "cglram" => Ok(Method::Cglram),
            "svd" => Ok(Method::Svd),
            other => Err(Error::UnknownMethod(other.to_string())),
        }
    }
}

/// Per-matrix rank-k truncation: total squared error Σ tsvd_error(Aᵢ, k)²
/// and the storage count of keeping N factor pairs.
pub fn svd_baseline(stack: &MatrixStack, k: usize) -> Result<(f64, u64)> {
    if k == 0 || k > stack.max_rank() {
        return Err(Error::RankOutOfRange {
            k,
            max: stack.max_rank(),
        });
    }
    let errors: Vec<f64> = stack
        .samples()
        .par_iter()
        .map(|a| tsvd_error(a, k).map(|e| e * e))
        .collect::<Result<_>>()?;
    let total = errors.iter().sum();
    let storage = storage_count(
        Method::Svd,
        stack.len(),
        stack.len(),
        k,
        stack.rows(),
        stack.cols(),
    );
    Ok((total, storage))
}

/// Pre-classify with vector K-means, then fit one projector pair per
/// cluster. No reassignment loop: the model's history has a single entry.
pub fn kmeans_glram(
    stack: &MatrixStack,
    clusters: usize,
    rank: usize,
    seed: u64,
    kmeans_cfg: &IterationConfig,
    glram_cfg: &IterationConfig,
) -> Result<ClusterModel> {
    let clustering = kmeans_fit(stack, clusters, seed, kmeans_cfg)?;
    fit_partition_once(
        stack,
        clustering.assignment().to_vec(),
        clusters,
        rank,
        glram_cfg,
    )
}

/// Values stored by each method (middle matrices plus factor pairs):
/// SVD keeps one pair per sample, the clustered fit one per cluster, the
/// shared fit a single pair.
pub fn storage_count(method: Method, n: usize, clusters: usize, k: usize, r: usize, c: usize) -> u64 {
    let (n, clusters, k, r, c) = (n as u64, clusters as u64, k as u64, r as u64, c as u64);
    let middles = n * k * k;
    match method {
        Method::Svd => middles + n * k * (r + c),
        Method::Cglram | Method::KmeansGlram => middles + clusters * k * (r + c),
        Method::Glram => middles + k * (r + c),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::glram::{glram_fit, random_orthonormal, reconstruct, ProjectorPair};
    use crate::io::{synth_generate, SynthSpec};
    use crate::matrix::Matrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn storage_formula_fixtures() {
        assert_eq!(storage_count(Method::Glram, 100, 10, 4, 28, 28), 1824);
        assert_eq!(storage_count(Method::Cglram, 100, 10, 4, 28, 28), 3840);
        assert_eq!(storage_count(Method::Svd, 100, 10, 4, 28, 28), 24000);
    }

    #[test]
    fn storage_ordering_over_cluster_counts() {
        let (n, k, r, c) = (57, 5, 19, 23);
        for clusters in 1..=n {
            let g = storage_count(Method::Glram, n, clusters, k, r, c);
            let cg = storage_count(Method::Cglram, n, clusters, k, r, c);
            let s = storage_count(Method::Svd, n, clusters, k, r, c);
            assert!(g <= cg && cg <= s);
        }
    }

    #[test]
    fn method_parsing() {
        assert_eq!("cglram".parse::<Method>().unwrap(), Method::Cglram);
        assert_eq!("kmeans-glram".parse::<Method>().unwrap(), Method::KmeansGlram);
        assert!(matches!(
            "pca".parse::<Method>(),
            Err(Error::UnknownMethod(_))
        ));
    }

    #[test]
    fn svd_baseline_zero_on_low_rank_stack() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pair = ProjectorPair::new(
            random_orthonormal(&mut rng, 7, 2),
            random_orthonormal(&mut rng, 6, 2),
        )
        .unwrap();
        let samples: Vec<Matrix> = (0..4)
            .map(|_| {
                let m =
                    Matrix::from_vec(2, 2, (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect())
                        .unwrap();
                reconstruct(&pair, &m).unwrap()
            })
            .collect();
        let stack = MatrixStack::new(samples).unwrap();
        let (err, _) = svd_baseline(&stack, 2).unwrap();
        assert!(err < 1e-10);
        // Full rank keeps everything.
        let (err_full, _) = svd_baseline(&stack, stack.max_rank()).unwrap();
        assert!(err_full < 1e-9);
    }

    #[test]
    fn svd_baseline_matches_per_sample_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let samples: Vec<Matrix> = (0..5)
            .map(|_| {
                Matrix::from_vec(6, 5, (0..30).map(|_| rng.gen_range(-1.0..1.0)).collect())
                    .unwrap()
            })
            .collect();
        let stack = MatrixStack::new(samples).unwrap();
        let (err, storage) = svd_baseline(&stack, 2).unwrap();
        let oracle: f64 = stack
            .samples()
            .iter()
            .map(|a| crate::svd::tsvd_error(a, 2).unwrap().powi(2))
            .sum();
        assert!((err - oracle).abs() < 1e-12);
        assert_eq!(storage, storage_count(Method::Svd, 5, 5, 2, 6, 5));
    }

    #[test]
    fn kmeans_glram_with_one_cluster_is_plain_glram() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let samples: Vec<Matrix> = (0..5)
            .map(|_| {
                Matrix::from_vec(6, 5, (0..30).map(|_| rng.gen_range(-1.0..1.0)).collect())
                    .unwrap()
            })
            .collect();
        let stack = MatrixStack::new(samples).unwrap();
        let cfg = IterationConfig::default();
        let model = kmeans_glram(&stack, 1, 3, 0, &cfg, &cfg).unwrap();
        let (_, _, trace) = glram_fit(&stack, 3, &cfg).unwrap();
        let glram_obj = trace.rmsre_history.last().unwrap().powi(2) * stack.len() as f64;
        assert!((model.wcssre() - glram_obj).abs() < 1e-10);
        assert_eq!(model.wcssre_history.len(), 1);
    }

    #[test]
    fn kmeans_glram_recovers_separated_clusters() {
        let spec = SynthSpec {
            clusters: 2,
            per_cluster: vec![10, 10],
            rows: 9,
            cols: 8,
            rank: 2,
            noise_sigma: 0.0,
            middle_scale: 4.0,
            seed: 13,
        };
        let stack = synth_generate(&spec).unwrap();
        let model = kmeans_glram(
            &stack,
            2,
            2,
            1,
            &IterationConfig::default(),
            &IterationConfig::default(),
        )
        .unwrap();
        let cglram_model = crate::cglram::cglram_fit_from_assignment(
            &stack,
            &model.assignment,
            None,
            &crate::cglram::CglramConfig::new(2, 2),
        )
        .unwrap();
        // Refinement from the pipeline's own partition can only descend.
        assert!(cglram_model.wcssre() <= model.wcssre() + 1e-9);
    }

    #[test]
    fn pipeline_and_refinement_agree_on_separated_clusters() {
        // Clusters that differ in vector-space mean and in subspace, so
        // both the K-means pipeline and the refined fit recover them.
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let mut samples = Vec::new();
        let mut labels = Vec::new();
        for cluster in 0..2u32 {
            let u = random_orthonormal(&mut rng, 9, 1);
            let v = random_orthonormal(&mut rng, 8, 1);
            for _ in 0..10 {
                let mut a = Matrix::zeros(9, 8);
                for i in 0..9 {
                    for j in 0..8 {
                        let noise: f64 = rng.gen_range(-0.1..0.1);
                        a.set(i, j, 10.0 * u.get(i, 0) * v.get(j, 0) + noise);
                    }
                }
                samples.push(a);
                labels.push(cluster);
            }
        }
        let stack = MatrixStack::new(samples).unwrap().with_labels(labels).unwrap();

        let cfg = IterationConfig::default();
        let pipeline = kmeans_glram(&stack, 2, 1, 0, &cfg, &cfg).unwrap();
        let mut ccfg = crate::cglram::CglramConfig::new(2, 1);
        ccfg.init = crate::cglram::CglramInit::KmeansPartition;
        let refined = crate::cglram::cglram_fit(&stack, &ccfg).unwrap();

        let agree = pipeline
            .assignment
            .iter()
            .zip(&refined.assignment)
            .filter(|(a, b)| a == b)
            .count();
        assert_eq!(agree.max(stack.len() - agree), stack.len());
        // Both recover the generator labels up to relabeling.
        let truth = stack.labels().unwrap();
        let hits = truth
            .iter()
            .zip(&refined.assignment)
            .filter(|(t, a)| **t as usize == **a)
            .count();
        assert_eq!(hits.max(stack.len() - hits), stack.len());
    }

    #[test]
    fn svd_lower_bounds_every_model() {
        let spec = SynthSpec {
            clusters: 2,
            per_cluster: vec![8, 8],
            rows: 8,
            cols: 7,
            rank: 2,
            noise_sigma: 0.1,
            middle_scale: 1.0,
            seed: 17,
        };
        let stack = synth_generate(&spec).unwrap();
        let k = 2;
        let (svd_err, _) = svd_baseline(&stack, k).unwrap();
        let cfg = IterationConfig::default();
        let km = kmeans_glram(&stack, 2, k, 0, &cfg, &cfg).unwrap();
        let (_, _, trace) = glram_fit(&stack, k, &cfg).unwrap();
        let glram_obj = trace.rmsre_history.last().unwrap().powi(2) * stack.len() as f64;
        let slack = 1e-6;
        assert!(svd_err <= km.wcssre() * (1.0 + slack));
        assert!(svd_err <= glram_obj * (1.0 + slack));
    }
}
