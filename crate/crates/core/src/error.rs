//! Error type shared by all modules of the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("mesh construction failed: {0}")]
    Mesh(String),

    #[error("assembly failed: {0}")]
    Assembly(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("requested {requested} eigenpairs but the problem dimension is {dim}")]
    CountExceedsDimension { requested: usize, dim: usize },

    #[error("eigensolver did not converge: achieved residual {achieved:.3e}, required {required:.3e}")]
    NonConvergence { achieved: f64, required: f64 },

    #[error("matrix is not positive definite: {0}")]
    NotSpd(String),

    #[error("snapshot set has numerical rank {rank}, requested basis dimension {requested}")]
    RankDeficient { requested: usize, rank: usize },

    #[error("basis too small: {needed} reduced eigenvalues needed, only {available} available")]
    BasisTooSmall { needed: usize, available: usize },

    #[error("degenerate clustering: lookahead exceeded cap of {cap}")]
    DegenerateClustering { cap: usize },

    #[error("detailed spectrum too short for the requested check: {0}")]
    InsufficientSpectrum(String),

    #[error("greedy selection stalled: estimators above tolerance but no admissible snapshot left")]
    GreedyStalled,
}

pub type Result<T> = std::result::Result<T, Error>;
