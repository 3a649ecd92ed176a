//! Seeded generator of clustered low-rank stacks with ground-truth labels.
//!
//! Each cluster draws its own orthonormal factor pair; samples are that
//! pair around random middle matrices plus optional entrywise Gaussian
//! noise. Deterministic for a fixed spec.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::glram::random_orthonormal;
use crate::matrix::Matrix;
use crate::stack::MatrixStack;

/// Shape, spread and seed of a synthetic clustered stack.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub clusters: usize,
    /// Sample count per cluster; length must equal `clusters`.
    pub per_cluster: Vec<usize>,
    pub rows: usize,
    pub cols: usize,
    /// True rank of every cluster's generating pair.
    pub rank: usize,
    /// Entrywise Gaussian noise scale.
    pub noise_sigma: f64,
    /// Scale of the random middle-matrix entries.
    pub middle_scale: f64,
    pub seed: u64,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.clusters == 0 {
            return Err(Error::InvalidSpec("cluster count must be at least 1".into()));
        }
        if self.per_cluster.len() != self.clusters {
            return Err(Error::InvalidSpec(format!(
                "per_cluster has {} entries for {} clusters",
                self.per_cluster.len(),
                self.clusters
            )));
        }
        if self.per_cluster.contains(&0) {
            return Err(Error::InvalidSpec("every cluster needs at least one sample".into()));
        }
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::InvalidSpec("dimensions must be positive".into()));
        }
        if self.rank == 0 || self.rank > self.rows.min(self.cols) {
            return Err(Error::InvalidSpec(format!(
                "rank {} out of range 1..={}",
                self.rank,
                self.rows.min(self.cols)
            )));
        }
        if !self.noise_sigma.is_finite() || self.noise_sigma < 0.0 {
            return Err(Error::InvalidSpec("noise_sigma must be finite and >= 0".into()));
        }
        if !self.middle_scale.is_finite() {
            return Err(Error::InvalidSpec("middle_scale must be finite".into()));
        }
        Ok(())
    }
}

/// Draw the stack described by `spec`; labels carry the generating cluster.
pub fn synth_generate(spec: &SynthSpec) -> Result<MatrixStack> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut samples = Vec::with_capacity(spec.per_cluster.iter().sum());
    let mut labels = Vec::with_capacity(samples.capacity());

    for (cluster, &count) in spec.per_cluster.iter().enumerate() {
        let left = random_orthonormal(&mut rng, spec.rows, spec.rank);
        let right = random_orthonormal(&mut rng, spec.cols, spec.rank);
        for _ in 0..count {
            let middle = Matrix::from_vec(
                spec.rank,
                spec.rank,
                (0..spec.rank * spec.rank)
                    .map(|_| spec.middle_scale * rng.sample::<f64, _>(StandardNormal))
                    .collect(),
            )?;
            let mut sample = left.matmul(&middle).matmul(&right.transpose());
            for i in 0..spec.rows {
                for j in 0..spec.cols {
                    let noise: f64 = rng.sample(StandardNormal);
                    let v = sample.get(i, j) + spec.noise_sigma * noise;
                    sample.set(i, j, v);
                }
            }
            samples.push(sample);
            labels.push(cluster as u32);
        }
    }
    MatrixStack::new(samples)?.with_labels(labels)
}
