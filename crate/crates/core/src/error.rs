use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid multi-index {0:?}: axes must be strictly increasing in 1..=7")]
    InvalidIndex(Vec<usize>),

    #[error("degree mismatch: expected {expected}, found {found}")]
    DegreeMismatch { expected: usize, found: usize },

    #[error("cannot contract scalar")]
    ContractScalar,

    #[error("metric is not positive definite")]
    NotPositiveDefinite,

    #[error("metric matrix is not symmetric (asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("degenerate 3-form")]
    DegenerateForm,

    #[error("non-positive G2 form")]
    NonPositive,

    #[error("Laplacian contract requires closed form (|dphi| = {0:e})")]
    NotClosed(f64),

    #[error("d^2 != 0: component {component} of d(d e^{k}) is {value:e}")]
    Jacobi {
        k: usize,
        component: String,
        value: f64,
    },

    #[error("frame normalization failed: {0}")]
    FrameNormalization(String),

    #[error("zero vector")]
    ZeroVector,

    #[error("vector is not of unit length: g(X,X) = {0}")]
    NotUnit(f64),

    #[error("unknown catalog entry `{0}`")]
    UnknownEntry(String),

    #[error("{0}")]
    Invalid(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
