//! GLRAM: one shared pair of orthonormal projectors for a whole stack.
//!
//! The fit alternates two symmetric eigenproblems. With the left factor L
//! fixed, the optimal right factor R collects the top-k eigenvectors of
//! Σ AᵢᵀLLᵀAᵢ; with R fixed, L collects the top-k eigenvectors of
//! Σ AᵢRRᵀAᵢᵀ. Each half-step is optimal given the other factor, so the
//! root mean square reconstruction error never increases.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::eigen::top_k_eigs_sym;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::stack::MatrixStack;

/// Iteration budget and relative-improvement stopping tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationConfig {
    pub max_iters: usize,
    pub rel_tol: f64,
}

impl Default for IterationConfig {
    fn default() -> Self {
        Self {
            max_iters: 100,
            rel_tol: 1e-6,
        }
    }
}

impl IterationConfig {
    pub(crate) fn validate(&self) -> Result<()> {
        if self.max_iters < 1 {
            return Err(Error::InvalidConfig("max_iters must be at least 1".into()));
        }
        if !self.rel_tol.is_finite() || self.rel_tol <= 0.0 {
            return Err(Error::InvalidConfig("rel_tol must be positive".into()));
        }
        Ok(())
    }
}

/// How the initial left/right factors are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InitStrategy {
    /// First k columns of the identity. Deterministic; the classic recipe.
    IdentityTop,
    /// Orthonormalized seeded Gaussian factors, for restart experiments.
    SeededRandomOrthonormal,
}

/// Column-orthonormal left (r×k) and right (c×k) factors; equal ranks on
/// both sides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectorPair {
    left: Matrix,
    right: Matrix,
}

impl ProjectorPair {
    /// Build a pair, checking column counts match and both factors are
    /// column-orthonormal to 1e-10 entrywise.
    pub fn new(left: Matrix, right: Matrix) -> Result<Self> {
        let pair = Self { left, right };
        pair.validate()?;
        Ok(pair)
    }

    /// Skip the orthonormality check; for factors that are orthonormal by
    /// construction (eigenvector blocks, Gram-Schmidt output).
    pub(crate) fn new_unchecked(left: Matrix, right: Matrix) -> Self {
        debug_assert_eq!(left.cols(), right.cols());
        Self { left, right }
    }

    pub fn left(&self) -> &Matrix {
        &self.left
    }

    pub fn right(&self) -> &Matrix {
        &self.right
    }

    /// Shared rank k of both factors.
    pub fn rank(&self) -> usize {
        self.left.cols()
    }

    /// Re-check the type invariants (useful after deserializing a model).
    pub fn validate(&self) -> Result<()> {
        if self.left.cols() != self.right.cols() {
            return Err(Error::ShapeMismatch {
                context: format!(
                    "left factor has {} columns, right factor {}",
                    self.left.cols(),
                    self.right.cols()
                ),
            });
        }
        let k = self.left.cols();
        if k == 0 || k > self.left.rows().min(self.right.rows()) {
            return Err(Error::RankOutOfRange {
                k,
                max: self.left.rows().min(self.right.rows()),
            });
        }
        for (name, m) in [("left", &self.left), ("right", &self.right)] {
            let defect = crate::eigen::orthonormality_defect(m);
            if defect > 1e-10 {
                return Err(Error::InvalidConfig(format!(
                    "{name} factor is not column-orthonormal (defect {defect:.3e})"
                )));
            }
        }
        Ok(())
    }

    /// Compressed representation M = Lᵀ A R (k×k).
    pub fn compress(&self, a: &Matrix) -> Matrix {
        self.left.transpose_matmul(a).matmul(&self.right)
    }

    pub(crate) fn shape_check(&self, rows: usize, cols: usize) -> Result<()> {
        if self.left.rows() != rows || self.right.rows() != cols {
            return Err(Error::ShapeMismatch {
                context: format!(
                    "projector pair expects {}x{} samples, got {rows}x{cols}",
                    self.left.rows(),
                    self.right.rows()
                ),
            });
        }
        Ok(())
    }
}

/// Per-sample k×k middle matrices tied to one projector pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressedSet {
    pub pair: ProjectorPair,
    pub middles: Vec<Matrix>,
}

/// Convergence record of one alternating fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitTrace {
    /// RMSRE after initialization (index 0) and after each iteration.
    pub rmsre_history: Vec<f64>,
    /// Projected energy Σ‖LᵀAᵢR‖_F² alongside each RMSRE entry.
    pub objective_history: Vec<f64>,
    /// Alternating iterations performed.
    pub iterations: usize,
    pub converged: bool,
}

/// Initial factors for an alternating fit.
pub fn glram_init(
    stack: &MatrixStack,
    k: usize,
    strategy: InitStrategy,
    seed: u64,
) -> Result<ProjectorPair> {
    let (r, c) = (stack.rows(), stack.cols());
    if k == 0 || k > r.min(c) {
        return Err(Error::RankOutOfRange { k, max: r.min(c) });
    }
    let pair = match strategy {
        InitStrategy::IdentityTop => {
            ProjectorPair::new_unchecked(Matrix::identity_top(r, k), Matrix::identity_top(c, k))
        }
        InitStrategy::SeededRandomOrthonormal => {
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let left = random_orthonormal(&mut rng, r, k);
            let right = random_orthonormal(&mut rng, c, k);
            ProjectorPair::new_unchecked(left, right)
        }
    };
    Ok(pair)
}

/// Seeded Gaussian n×k matrix orthonormalized by twice-iterated
/// Gram-Schmidt.
pub(crate) fn random_orthonormal<R: Rng>(rng: &mut R, n: usize, k: usize) -> Matrix {
    assert!(k <= n);
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(k);
    while cols.len() < k {
        let mut v: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        for _ in 0..2 {
            for basis in &cols {
                let dot: f64 = v.iter().zip(basis).map(|(a, b)| a * b).sum();
                for (vi, bi) in v.iter_mut().zip(basis) {
                    *vi -= dot * bi;
                }
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            for vi in &mut v {
                *vi /= norm;
            }
            cols.push(v);
        }
    }
    let mut m = Matrix::zeros(n, k);
    for (j, col) in cols.iter().enumerate() {
        for (i, &value) in col.iter().enumerate() {
            m.set(i, j, value);
        }
    }
    m
}

/// Fit a shared pair to the whole stack from the IdentityTop start.
pub fn glram_fit(
    stack: &MatrixStack,
    k: usize,
    cfg: &IterationConfig,
) -> Result<(ProjectorPair, CompressedSet, FitTrace)> {
    let init = glram_init(stack, k, InitStrategy::IdentityTop, 0)?;
    glram_fit_with_init(stack, &init, cfg)
}

/// Fit a shared pair starting from (and warm-starting at) a given pair.
pub fn glram_fit_with_init(
    stack: &MatrixStack,
    init: &ProjectorPair,
    cfg: &IterationConfig,
) -> Result<(ProjectorPair, CompressedSet, FitTrace)> {
    init.shape_check(stack.rows(), stack.cols())?;
    let refs: Vec<&Matrix> = stack.samples().iter().collect();
    let (pair, middles, trace) = fit_core(&refs, init, cfg)?;
    Ok((
        pair.clone(),
        CompressedSet { pair, middles },
        trace,
    ))
}

/// Alternating fit over borrowed samples; shared by GLRAM proper and the
/// per-cluster refits of the clustered variant.
pub(crate) fn fit_core(
    samples: &[&Matrix],
    init: &ProjectorPair,
    cfg: &IterationConfig,
) -> Result<(ProjectorPair, Vec<Matrix>, FitTrace)> {
    cfg.validate()?;
    if samples.is_empty() {
        return Err(Error::EmptyStack);
    }
    let (r, c) = (samples[0].rows(), samples[0].cols());
    let k = init.rank();
    if k == 0 || k > r.min(c) {
        return Err(Error::RankOutOfRange { k, max: r.min(c) });
    }
    init.shape_check(r, c)?;

    let mut left = init.left().clone();
    let mut right = init.right().clone();
    let (err0, obj0) = evaluate(samples, &left, &right);
    let mut rmsre_history = vec![err0];
    let mut objective_history = vec![obj0];
    let mut converged = err0 == 0.0;
    let mut iterations = 0;

    while !converged && iterations < cfg.max_iters {
        // Right factor from the projected column Gram matrix Σ AᵀLLᵀA.
        let mut gram_r = Matrix::zeros(c, c);
        for a in samples {
            let b = a.transpose_matmul(&left); // AᵀL, c×k
            gram_r.add_assign(&b.matmul(&b.transpose()));
        }
        right = top_k_eigs_sym(&gram_r, k)?.vectors;

        // Left factor from Σ ARRᵀAᵀ with the fresh R.
        let mut gram_l = Matrix::zeros(r, r);
        for a in samples {
            let b = a.matmul(&right); // AR, r×k
            gram_l.add_assign(&b.matmul(&b.transpose()));
        }
        left = top_k_eigs_sym(&gram_l, k)?.vectors;

        iterations += 1;
        let (err, obj) = evaluate(samples, &left, &right);
        let prev = *rmsre_history.last().unwrap();
        rmsre_history.push(err);
        objective_history.push(obj);
        if prev <= f64::MIN_POSITIVE || (prev - err) / prev < cfg.rel_tol {
            converged = true;
        }
    }

    let pair = ProjectorPair::new_unchecked(left, right);
    let middles: Vec<Matrix> = samples.iter().map(|a| pair.compress(a)).collect();
    Ok((
        pair,
        middles,
        FitTrace {
            rmsre_history,
            objective_history,
            iterations,
            converged,
        },
    ))
}

/// Explicit RMSRE and projected energy for a candidate pair.
fn evaluate(samples: &[&Matrix], left: &Matrix, right: &Matrix) -> (f64, f64) {
    let mut err_sq = 0.0;
    let mut obj = 0.0;
    for a in samples {
        let middle = left.transpose_matmul(a).matmul(right);
        let approx = left.matmul(&middle).matmul(&right.transpose());
        err_sq += a.sub(&approx).frobenius_norm_sq();
        obj += middle.frobenius_norm_sq();
    }
    ((err_sq / samples.len() as f64).sqrt(), obj)
}

/// L M Rᵀ for a k×k middle matrix.
pub fn reconstruct(pair: &ProjectorPair, middle: &Matrix) -> Result<Matrix> {
    let k = pair.rank();
    if middle.rows() != k || middle.cols() != k {
        return Err(Error::ShapeMismatch {
            context: format!(
                "middle matrix is {}x{}, expected {k}x{k}",
                middle.rows(),
                middle.cols()
            ),
        });
    }
    Ok(pair.left().matmul(middle).matmul(&pair.right().transpose()))
}

/// Root mean square reconstruction error of a stack under one compressed
/// set: sqrt((1/N) Σ ‖Aᵢ − L Mᵢ Rᵀ‖_F²).
pub fn rmsre(stack: &MatrixStack, set: &CompressedSet) -> Result<f64> {
    if set.middles.len() != stack.len() {
        return Err(Error::ShapeMismatch {
            context: format!(
                "{} middles for {} samples",
                set.middles.len(),
                stack.len()
            ),
        });
    }
    set.pair.shape_check(stack.rows(), stack.cols())?;
    let mut err_sq = 0.0;
    for (a, m) in stack.samples().iter().zip(&set.middles) {
        let approx = reconstruct(&set.pair, m)?;
        err_sq += a.sub(&approx).frobenius_norm_sq();
    }
    Ok((err_sq / stack.len() as f64).sqrt())
}
