//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by matrix construction, fitting, and file I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix must be square, got {rows}x{cols}")]
    NonSquare { rows: usize, cols: usize },

    #[error("rank {k} out of range 1..={max}")]
    RankOutOfRange { k: usize, max: usize },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("iteration cap {limit} exceeded without convergence")]
    ConvergenceFailure { limit: usize },

    #[error("shape mismatch: {context}")]
    ShapeMismatch { context: String },

    #[error("matrix stack is empty")]
    EmptyStack,

    #[error("cluster count {clusters} exceeds sample count {samples}")]
    TooManyClusters { clusters: usize, samples: usize },

    #[error("unknown method `{0}` (expected svd, glram, kmeans-glram or cglram)")]
    UnknownMethod(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid synthetic data spec: {0}")]
    InvalidSpec(String),

    #[error("invalid reduction ratio {0}: must lie in (0, 1]")]
    InvalidRatio(f64),

    #[error("bad magic: expected {expected}, got {got}")]
    BadMagic { expected: String, got: String },

    #[error("truncated file: {0}")]
    TruncatedFile(String),

    #[error("header dimensions overflow the address space")]
    DimensionOverflow,

    #[error("parse failure at line {line}: {msg}")]
    ParseFailure { line: usize, msg: String },

    #[error("I/O failure: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization failure: {0}")]
    Serde(#[from] serde_json::Error),

    #[error("CSV failure: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Stable machine-readable tag for error records emitted by the CLI.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NonSquare { .. } => "non_square",
            Error::RankOutOfRange { .. } => "rank_out_of_range",
            Error::NonFinite(_) => "non_finite",
            Error::ConvergenceFailure { .. } => "convergence_failure",
            Error::ShapeMismatch { .. } => "shape_mismatch",
            Error::EmptyStack => "empty_stack",
            Error::TooManyClusters { .. } => "too_many_clusters",
            Error::UnknownMethod(_) => "unknown_method",
            Error::InvalidConfig(_) => "invalid_config",
            Error::InvalidSpec(_) => "invalid_spec",
            Error::InvalidRatio(_) => "invalid_ratio",
            Error::BadMagic { .. } => "bad_magic",
            Error::TruncatedFile(_) => "truncated_file",
            Error::DimensionOverflow => "dimension_overflow",
            Error::ParseFailure { .. } => "parse_failure",
            Error::Io(_) => "io",
            Error::Serde(_) => "serde",
            Error::Csv(_) => "csv",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
