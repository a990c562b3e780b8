use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("layout mismatch: {0}")]
    LayoutMismatch(String),
    #[error("arithmetic modes differ (exact vs float)")]
    ModeMismatch,
    #[error("constant term is zero; series is not invertible")]
    ZeroConstantTerm,
    #[error("bad constant term: {0}")]
    BadConstantTerm(&'static str),
    #[error("matrix is not square")]
    NotSquare,
    #[error("metric is degenerate or not positive definite at the base point")]
    DegenerateMetric,
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("insufficient input order: need {required}, potential is known to order {available}")]
    InsufficientInputOrder { required: u32, available: u32 },
    #[error("potential is not Hermitian: {0}")]
    NonHermitian(String),
    #[error("truncated series unreliable at this point: {0}")]
    TruncationUnreliable(String),
    #[error("point outside model domain: {0}")]
    DomainError(String),
    #[error("weight is not integrable: {0}")]
    NonIntegrableWeight(String),
    #[error("series tail did not converge: {0}")]
    TailNotConverged(String),
    #[error("quadrature did not converge: {0}")]
    QuadratureNotConverged(String),
    #[error("invalid potential specification: {0}")]
    Spec(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
