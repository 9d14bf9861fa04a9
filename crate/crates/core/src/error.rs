use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("graph has no feature matrix")]
    MissingFeatures,

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    Asymmetric(f64),

    #[error("requested {requested} eigenpairs but only {available} are available")]
    RankOutOfRange { requested: usize, available: usize },

    #[error("lanczos did not converge after {restarts} restarts (max residual {residual:e})")]
    NoConvergence { restarts: usize, residual: f64 },

    #[error("plan is inconsistent with graph: {0}")]
    InconsistentPlan(String),

    #[error("infeasible plan: {0}")]
    InfeasiblePlan(String),

    #[error("mask length {got} does not match plan support length {expected}")]
    MaskMismatch { expected: usize, got: usize },

    #[error("duplicate flip pair ({0}, {1})")]
    DuplicateFlip(usize, usize),

    #[error("index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: usize, limit: usize },

    #[error("size mismatch: {0}")]
    SizeMismatch(String),

    #[error("cluster {0} has zero volume")]
    ZeroVolume(usize),

    #[error("{0}")]
    Degenerate(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
