//! Clustered GLRAM: Lloyd's loop over generalized centroids.
//!
//! A cluster's centroid is not a mean but an orthonormal projector pair
//! (L, R); a sample's distance to a centroid is the squared Frobenius
//! residual of its best two-sided reconstruction through that pair. The
//! fit alternates two descent steps: reassign every matrix to its nearest
//! centroid, then refit each cluster's pair by the alternating eigen
//! iteration warm-started from the previous pair. Both steps are
//! non-increasing in the within-cluster sum of squared reconstruction
//! errors, so the loop terminates in finitely many rounds.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::glram::{fit_core, IterationConfig, ProjectorPair};
use crate::kmeans::kmeans_fit;
use crate::matrix::Matrix;
use crate::stack::MatrixStack;

/// How the initial clustering is produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CglramInit {
    /// Seeded random partition into K non-empty groups, each fitted to
    /// produce an initial centroid.
    RandomPartition,
    /// K seeded singleton samples fitted as centroids; everything else is
    /// then classified against them.
    SampleSeeds,
    /// Partition from vector K-means on the vectorized samples; the
    /// initial centroids are then exactly the K-means→GLRAM model.
    KmeansPartition,
}

impl std::fmt::Display for CglramInit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            CglramInit::RandomPartition => "random-partition",
            CglramInit::SampleSeeds => "sample-seeds",
            CglramInit::KmeansPartition => "kmeans-partition",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for CglramInit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random-partition" => Ok(CglramInit::RandomPartition),
            "sample-seeds" => Ok(CglramInit::SampleSeeds),
            "kmeans-partition" => Ok(CglramInit::KmeansPartition),
            other => Err(Error::InvalidConfig(format!(
                "unknown init strategy `{other}`"
            ))),
        }
    }
}

/// Why the outer loop stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    /// Reassignment left every sample where it was.
    FixedPoint,
    /// Relative objective reduction fell to the threshold.
    RelativeReduction,
    /// Outer iteration cap reached.
    MaxOuter,
    /// Non-iterative pipeline (one classification, one fit round).
    SinglePass,
}

/// Knobs for a clustered fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CglramConfig {
    pub clusters: usize,
    pub rank: usize,
    /// Outer relative-reduction threshold.
    pub eta: f64,
    pub max_outer: usize,
    /// Per-cluster alternating-fit budget.
    pub inner: IterationConfig,
    pub seed: u64,
    pub init: CglramInit,
}

impl CglramConfig {
    pub fn new(clusters: usize, rank: usize) -> Self {
        Self {
            clusters,
            rank,
            eta: 1e-4,
            max_outer: 50,
            inner: IterationConfig {
                max_iters: 30,
                rel_tol: 1e-6,
            },
            seed: 0,
            init: CglramInit::RandomPartition,
        }
    }

    fn validate(&self, stack: &MatrixStack) -> Result<()> {
        if self.clusters == 0 {
            return Err(Error::InvalidConfig("cluster count must be at least 1".into()));
        }
        if self.clusters > stack.len() {
            return Err(Error::TooManyClusters {
                clusters: self.clusters,
                samples: stack.len(),
            });
        }
        if self.rank == 0 || self.rank > stack.max_rank() {
            return Err(Error::RankOutOfRange {
                k: self.rank,
                max: stack.max_rank(),
            });
        }
        if !self.eta.is_finite() || self.eta <= 0.0 {
            return Err(Error::InvalidConfig("eta must be positive".into()));
        }
        if self.max_outer == 0 {
            return Err(Error::InvalidConfig("max_outer must be at least 1".into()));
        }
        self.inner.validate()
    }
}

/// K generalized centroids plus the assignment and objective history that
/// produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub clusters: usize,
    pub centroids: Vec<ProjectorPair>,
    pub assignment: Vec<usize>,
    /// Per-sample middle matrix under its own cluster's pair.
    pub middles: Vec<Matrix>,
    /// Objective after initialization (index 0) and after each completed
    /// outer round.
    pub wcssre_history: Vec<f64>,
    pub outer_iterations: usize,
    pub converged: bool,
    pub termination: Termination,
    /// Total alternating iterations across every per-cluster fit.
    pub inner_iterations: usize,
}

impl ClusterModel {
    pub fn wcssre(&self) -> f64 {
        *self
            .wcssre_history
            .last()
            .expect("history has the initialization entry")
    }

    pub fn rank(&self) -> usize {
        self.centroids.first().map(ProjectorPair::rank).unwrap_or(0)
    }

    /// Structural and orthonormality checks against a stack, for models
    /// read back from disk.
    pub fn validate(&self, stack: &MatrixStack) -> Result<()> {
        if self.centroids.len() != self.clusters || self.clusters == 0 {
            return Err(Error::InvalidConfig(
                "centroid count disagrees with cluster count".into(),
            ));
        }
        if self.assignment.len() != stack.len() || self.middles.len() != stack.len() {
            return Err(Error::ShapeMismatch {
                context: "assignment/middles length differs from the stack".into(),
            });
        }
        if self.assignment.iter().any(|&a| a >= self.clusters) {
            return Err(Error::InvalidConfig("assignment index out of range".into()));
        }
        for pair in &self.centroids {
            pair.validate()?;
            pair.shape_check(stack.rows(), stack.cols())?;
        }
        let k = self.rank();
        if self.middles.iter().any(|m| m.rows() != k || m.cols() != k) {
            return Err(Error::ShapeMismatch {
                context: "middle matrices are not k×k".into(),
            });
        }
        Ok(())
    }
}

/// Squared generalized distance ‖A − L(LᵀAR)Rᵀ‖_F².
///
/// Evaluated by explicit reconstruct-and-subtract; equals
/// ‖A‖_F² − ‖LᵀAR‖_F² up to roundoff by the orthogonal-projection
/// identity.
pub fn generalized_distance_sq(a: &Matrix, pair: &ProjectorPair) -> Result<f64> {
    pair.shape_check(a.rows(), a.cols())?;
    Ok(distance_sq_unchecked(a, pair))
}

fn distance_sq_unchecked(a: &Matrix, pair: &ProjectorPair) -> f64 {
    let middle = pair.compress(a);
    let approx = pair.left().matmul(&middle).matmul(&pair.right().transpose());
    a.sub(&approx).frobenius_norm_sq()
}

/// Nearest-centroid assignment; ties break toward the lowest index.
pub fn assign_clusters(stack: &MatrixStack, centroids: &[ProjectorPair]) -> Result<Vec<usize>> {
    Ok(assign_with_distances(stack, centroids)?.0)
}

/// Assignment plus each sample's distance to its assigned centroid.
fn assign_with_distances(
    stack: &MatrixStack,
    centroids: &[ProjectorPair],
) -> Result<(Vec<usize>, Vec<f64>)> {
    if centroids.is_empty() {
        return Err(Error::ShapeMismatch {
            context: "no centroids to assign against".into(),
        });
    }
    for pair in centroids {
        pair.shape_check(stack.rows(), stack.cols())?;
    }
    let results: Vec<(usize, f64)> = stack
        .samples()
        .par_iter()
        .map(|a| {
            let mut best = 0usize;
            let mut best_d = f64::INFINITY;
            for (j, pair) in centroids.iter().enumerate() {
                let d = distance_sq_unchecked(a, pair);
                if d < best_d {
                    best_d = d;
                    best = j;
                }
            }
            (best, best_d)
        })
        .collect();
    Ok(results.into_iter().unzip())
}

/// Within-cluster sum of squared reconstruction errors of a stored model:
/// Σ_j Σ_{i∈V_j} ‖A_i − L_j M_i R_jᵀ‖_F².
pub fn wcssre(stack: &MatrixStack, model: &ClusterModel) -> Result<f64> {
    model.validate(stack)?;
    let mut total = 0.0;
    for (i, a) in stack.samples().iter().enumerate() {
        let pair = &model.centroids[model.assignment[i]];
        let approx = pair
            .left()
            .matmul(&model.middles[i])
            .matmul(&pair.right().transpose());
        total += a.sub(&approx).frobenius_norm_sq();
    }
    Ok(total)
}

/// Clustered fit with the configured initialization strategy.
pub fn cglram_fit(stack: &MatrixStack, cfg: &CglramConfig) -> Result<ClusterModel> {
    cfg.validate(stack)?;
    match cfg.init {
        CglramInit::RandomPartition => {
            let assignment = random_partition(stack.len(), cfg.clusters, cfg.seed);
            lloyd_core(stack, assignment, InitWarm::Identity, cfg)
        }
        CglramInit::KmeansPartition => {
            let clustering = kmeans_fit(stack, cfg.clusters, cfg.seed, &IterationConfig::default())?;
            lloyd_core(stack, clustering.assignment().to_vec(), InitWarm::Identity, cfg)
        }
        CglramInit::SampleSeeds => {
            let seeds = sample_seed_pairs(stack, cfg)?;
            let (mut assignment, distances) = assign_with_distances(stack, &seeds)?;
            repair_empty(&mut assignment, &distances, cfg.clusters);
            lloyd_core(stack, assignment, InitWarm::PerCluster(seeds), cfg)
        }
    }
}

/// Clustered fit from an explicit starting partition, optionally
/// warm-starting every per-cluster fit from one shared pair (e.g. a
/// converged whole-stack pair, which guarantees the initial objective is
/// no worse than that pair's).
pub fn cglram_fit_from_assignment(
    stack: &MatrixStack,
    assignment: &[usize],
    warm: Option<&ProjectorPair>,
    cfg: &CglramConfig,
) -> Result<ClusterModel> {
    cfg.validate(stack)?;
    if assignment.len() != stack.len() {
        return Err(Error::ShapeMismatch {
            context: format!(
                "assignment covers {} samples, stack has {}",
                assignment.len(),
                stack.len()
            ),
        });
    }
    if assignment.iter().any(|&a| a >= cfg.clusters) {
        return Err(Error::InvalidConfig("assignment index out of range".into()));
    }
    let mut counts = vec![0usize; cfg.clusters];
    for &a in assignment {
        counts[a] += 1;
    }
    if counts.contains(&0) {
        return Err(Error::InvalidConfig(
            "initial assignment leaves a cluster empty".into(),
        ));
    }
    let warm = match warm {
        Some(pair) => {
            pair.shape_check(stack.rows(), stack.cols())?;
            if pair.rank() != cfg.rank {
                return Err(Error::RankOutOfRange {
                    k: pair.rank(),
                    max: cfg.rank,
                });
            }
            InitWarm::Shared(pair.clone())
        }
        None => InitWarm::Identity,
    };
    lloyd_core(stack, assignment.to_vec(), warm, cfg)
}

enum InitWarm {
    Identity,
    Shared(ProjectorPair),
    PerCluster(Vec<ProjectorPair>),
}

/// Seeded random partition into `clusters` non-empty groups.
fn random_partition(n: usize, clusters: usize, seed: u64) -> Vec<usize> {
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut assignment = vec![0usize; n];
    for (j, &i) in order.iter().take(clusters).enumerate() {
        assignment[i] = j;
    }
    for &i in order.iter().skip(clusters) {
        assignment[i] = rng.gen_range(0..clusters);
    }
    assignment
}

/// Fit one singleton centroid per seeded sample.
fn sample_seed_pairs(stack: &MatrixStack, cfg: &CglramConfig) -> Result<Vec<ProjectorPair>> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed);
    let chosen = rand::seq::index::sample(&mut rng, stack.len(), cfg.clusters);
    let init = identity_pair(stack, cfg.rank);
    chosen
        .iter()
        .map(|i| {
            let member = [stack.sample(i)];
            let (pair, _, _) = fit_core(&member, &init, &cfg.inner)?;
            Ok(pair)
        })
        .collect()
}

fn identity_pair(stack: &MatrixStack, rank: usize) -> ProjectorPair {
    crate::glram::glram_init(stack, rank, crate::glram::InitStrategy::IdentityTop, 0)
        .expect("rank validated by the caller")
}

/// Move the farthest-from-its-centroid sample into each empty cluster,
/// never draining a cluster below one member.
fn repair_empty(assignment: &mut [usize], dist_to_assigned: &[f64], clusters: usize) {
    let mut counts = vec![0usize; clusters];
    for &a in assignment.iter() {
        counts[a] += 1;
    }
    for empty in 0..clusters {
        if counts[empty] > 0 {
            continue;
        }
        let mut donor: Option<(usize, f64)> = None;
        for (i, &d) in dist_to_assigned.iter().enumerate() {
            if counts[assignment[i]] <= 1 {
                continue;
            }
            let better = match donor {
                None => true,
                Some((_, best)) => d > best,
            };
            if better {
                donor = Some((i, d));
            }
        }
        let (i, _) = donor.expect("some cluster has more than one member");
        counts[assignment[i]] -= 1;
        counts[empty] += 1;
        assignment[i] = empty;
    }
}

struct ClusterFit {
    pair: ProjectorPair,
    /// (sample index, middle matrix) for each member.
    middles: Vec<(usize, Matrix)>,
    error_sq: f64,
    iterations: usize,
}

/// Refit every cluster on its members, warm-starting from `warm_for`.
fn refit_clusters(
    stack: &MatrixStack,
    assignment: &[usize],
    clusters: usize,
    warm_for: &dyn Fn(usize) -> ProjectorPair,
    inner: &IterationConfig,
) -> Result<Vec<ClusterFit>> {
    let members: Vec<Vec<usize>> = {
        let mut m = vec![Vec::new(); clusters];
        for (i, &a) in assignment.iter().enumerate() {
            m[a].push(i);
        }
        m
    };
    let warms: Vec<ProjectorPair> = (0..clusters).map(warm_for).collect();
    members
        .par_iter()
        .zip(warms.par_iter())
        .map(|(idxs, warm)| {
            let samples: Vec<&Matrix> = idxs.iter().map(|&i| stack.sample(i)).collect();
            let (pair, middles, trace) = fit_core(&samples, warm, inner)?;
            let last = *trace.rmsre_history.last().unwrap();
            Ok(ClusterFit {
                pair,
                middles: idxs.iter().copied().zip(middles).collect(),
                error_sq: last * last * idxs.len() as f64,
                iterations: trace.iterations,
            })
        })
        .collect()
}

/// The outer Lloyd loop shared by every initialization mode.
fn lloyd_core(
    stack: &MatrixStack,
    initial_assignment: Vec<usize>,
    warm: InitWarm,
    cfg: &CglramConfig,
) -> Result<ClusterModel> {
    let n = stack.len();
    let clusters = cfg.clusters;
    let identity = identity_pair(stack, cfg.rank);

    // Step 1: fit a centroid on every initial cluster.
    let warm_for: Box<dyn Fn(usize) -> ProjectorPair> = match &warm {
        InitWarm::Identity => Box::new(move |_| identity.clone()),
        InitWarm::Shared(pair) => {
            let pair = pair.clone();
            Box::new(move |_| pair.clone())
        }
        InitWarm::PerCluster(pairs) => {
            let pairs = pairs.clone();
            Box::new(move |j| pairs[j].clone())
        }
    };
    let mut fits = refit_clusters(stack, &initial_assignment, clusters, &warm_for, &cfg.inner)?;

    let mut assignment = initial_assignment;
    let mut inner_iterations: usize = fits.iter().map(|f| f.iterations).sum();
    let mut wcssre_history = vec![fits.iter().map(|f| f.error_sq).sum::<f64>()];
    let mut outer_iterations = 0;
    let mut converged = false;
    let mut termination = Termination::MaxOuter;

    for round in 1..=cfg.max_outer {
        outer_iterations = round;
        let pairs: Vec<ProjectorPair> = fits.iter().map(|f| f.pair.clone()).collect();
        let (mut next, distances) = assign_with_distances(stack, &pairs)?;
        repair_empty(&mut next, &distances, clusters);

        if next == assignment {
            // The pairs were fitted to exactly this membership last round;
            // refitting would be a no-op.
            converged = true;
            termination = Termination::FixedPoint;
            break;
        }

        let warm_prev: Box<dyn Fn(usize) -> ProjectorPair> = {
            let pairs = pairs.clone();
            Box::new(move |j| pairs[j].clone())
        };
        fits = refit_clusters(stack, &next, clusters, &warm_prev, &cfg.inner)?;
        inner_iterations += fits.iter().map(|f| f.iterations).sum::<usize>();
        assignment = next;

        let objective = fits.iter().map(|f| f.error_sq).sum::<f64>();
        let prev = *wcssre_history.last().unwrap();
        wcssre_history.push(objective);
        if prev <= f64::MIN_POSITIVE || (prev - objective) <= cfg.eta * prev {
            converged = true;
            termination = Termination::RelativeReduction;
            break;
        }
    }

    let mut middles: Vec<Option<Matrix>> = vec![None; n];
    for fit in &fits {
        for (i, m) in &fit.middles {
            middles[*i] = Some(m.clone());
        }
    }
    let middles: Vec<Matrix> = middles
        .into_iter()
        .map(|m| m.expect("every sample belongs to one cluster"))
        .collect();

    Ok(ClusterModel {
        clusters,
        centroids: fits.into_iter().map(|f| f.pair).collect(),
        assignment,
        middles,
        wcssre_history,
        outer_iterations,
        converged,
        termination,
        inner_iterations,
    })
}

/// A ClusterModel for a partition fitted once, with no reassignment loop
/// (the K-means→GLRAM baseline).
pub(crate) fn fit_partition_once(
    stack: &MatrixStack,
    assignment: Vec<usize>,
    clusters: usize,
    rank: usize,
    inner: &IterationConfig,
) -> Result<ClusterModel> {
    if rank == 0 || rank > stack.max_rank() {
        return Err(Error::RankOutOfRange {
            k: rank,
            max: stack.max_rank(),
        });
    }
    let identity = identity_pair(stack, rank);
    let warm: Box<dyn Fn(usize) -> ProjectorPair> = Box::new(move |_| identity.clone());
    let fits = refit_clusters(stack, &assignment, clusters, &warm, inner)?;

    let mut middles: Vec<Option<Matrix>> = vec![None; stack.len()];
    for fit in &fits {
        for (i, m) in &fit.middles {
            middles[*i] = Some(m.clone());
        }
    }
    let middles: Vec<Matrix> = middles
        .into_iter()
        .map(|m| m.expect("assignment is a partition"))
        .collect();

    Ok(ClusterModel {
        clusters,
        assignment,
        wcssre_history: vec![fits.iter().map(|f| f.error_sq).sum()],
        outer_iterations: 0,
        converged: true,
        termination: Termination::SinglePass,
        inner_iterations: fits.iter().map(|f| f.iterations).sum(),
        centroids: fits.into_iter().map(|f| f.pair).collect(),
        middles,
    })
}
