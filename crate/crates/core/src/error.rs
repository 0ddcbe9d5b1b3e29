use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CksvarError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),
    #[error("{check} violated: {message}")]
    Dgp { check: String, message: String },
    #[error("rank mismatch: expected {expected}, found {found}")]
    RankMismatch { expected: usize, found: usize },
    #[error("matrix has deficient column rank")]
    RankDeficient,
    #[error("wrong case: {0}")]
    WrongCase(String),
    #[error("assumption violated: {0}")]
    Assumption(String),
    #[error("coherence violation at t={t}: {message}")]
    Coherence { t: usize, message: String },
    #[error("initial value is not in the common-trend space (residual {residual:e})")]
    NotInTrendSpace { residual: f64 },
    #[error("discontinuous kink map: {0}")]
    Discontinuous(String),
    #[error("empty matrix set")]
    EmptySet,
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, CksvarError>;
