//! Compression of matrix collections by shared two-sided low-rank
//! projection, with clustering on top.
//!
//! The crate fits three families of models to a stack of same-shape
//! matrices and compares them:
//!
//! * per-matrix truncated SVD: the unconstrained per-sample optimum,
//! * GLRAM: one shared orthonormal projector pair (L, R) for the whole
//!   stack, fitted by alternating top-k eigendecompositions,
//! * CGLRAM: a Lloyd-style loop that clusters matrices around projector
//!   pairs ("generalized centroids") under the two-sided reconstruction
//!   distance and refits each cluster by GLRAM,
//!
//! plus the K-means→GLRAM pipeline as a pre-clustered baseline. A benchmark
//! layer sweeps ranks and seeds and emits JSON/CSV reports; `io` covers IDX
//! image files, a binary stack format, CSV fixtures and a seeded synthetic
//! generator with ground-truth clusters.
//!
//! See the `book/` guide for worked examples; its code blocks compile as
//! doctests of this crate.

pub mod baselines;
pub mod cglram;
pub mod eigen;
pub mod error;
pub mod glram;
pub mod io;
pub mod kmeans;
pub mod matrix;
pub mod report;
pub mod stack;
pub mod svd;

pub use crate::cglram::{
    assign_clusters, cglram_fit, cglram_fit_from_assignment, generalized_distance_sq, wcssre,
    CglramConfig, CglramInit, ClusterModel, Termination,
};
pub use crate::eigen::{top_k_eigs_sym, EigenResult};
pub use crate::error::{Error, Result};
pub use crate::glram::{
    glram_fit, glram_fit_with_init, glram_init, reconstruct, rmsre, CompressedSet, FitTrace,
    InitStrategy, IterationConfig, ProjectorPair,
};
pub use crate::kmeans::{kmeans_fit, variance_decomposition, VClustering};
pub use crate::matrix::{frobenius_norm, Matrix};
pub use crate::stack::MatrixStack;
pub use crate::svd::{full_svd, tsvd_error, SvdResult};

// Book chapters double as doctests so the guide can never drift from the
// public API.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/matrices.md")]
    mod matrices {}
    #[doc = include_str!("../../../book/src/glram.md")]
    mod glram {}
    #[doc = include_str!("../../../book/src/kmeans.md")]
    mod kmeans {}
    #[doc = include_str!("../../../book/src/cglram.md")]
    mod cglram {}
    #[doc = include_str!("../../../book/src/baselines.md")]
    mod baselines {}
    #[doc = include_str!("../../../book/src/data.md")]
    mod data {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
