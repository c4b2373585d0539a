use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("model singularity: grad ln q is not finite at the given statistic")]
    ModelSingularity,

    #[error("subspace violation: statistic is {distance:e} away from the model subspace")]
    SubspaceViolation { distance: f64 },

    #[error("full-rank model has no subspace basis; use sure_score instead")]
    FullRankModel,

    #[error("estimator output is not finite near the evaluation point (nondifferentiable point)")]
    NondifferentiablePoint,

    #[error("matrix is not symmetric positive definite: {0}")]
    NotPositiveDefinite(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate regularization: Q + lambda L'L is singular at lambda = {lambda:e}")]
    DegenerateRegularization { lambda: f64 },

    #[error("GCV denominator vanishes at lambda = {lambda:e}")]
    GcvDegenerate { lambda: f64 },

    #[error("discrepancy equation has no sign change on the grid; closest endpoint lambda = {closest:e}")]
    DiscrepancyUnbracketed { closest: f64 },

    #[error("solver failed on Monte-Carlo probe {probe}: {source}")]
    ProbeFailure { probe: usize, source: Box<Error> },

    #[error("solver did not converge after {iters} iterations (KKT residual {residual:e})")]
    NonConverged { iters: usize, residual: f64 },

    #[error("signal length {len} is not a power of two of at least 2^{levels}")]
    LengthError { len: usize, levels: usize },

    #[error("unknown name: {0}")]
    UnknownName(String),

    #[error("PGM error: {0}")]
    Pgm(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("report schema mismatch in {path}: {detail}")]
    SchemaMismatch { path: PathBuf, detail: String },

    #[error("conflicting duplicate row for method {method:?} on problem {problem:?}")]
    DuplicateRow { method: String, problem: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
