use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("factor index {index} out of range for {count} tensor factors")]
    FactorOutOfRange { index: usize, count: usize },

    #[error("operator is not Hermitian (relative deviation {0:e})")]
    NotHermitian(f64),

    #[error("operator is not positive semidefinite (min eigenvalue {0:e})")]
    NotPsd(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("support condition violated: {0}")]
    Support(String),

    #[error("construction refused: {0}")]
    Refused(String),

    #[error("search failed: {0}")]
    SearchFailed(String),

    #[error("eigensolver did not converge after {0} sweeps")]
    NoConvergence(usize),

    #[error("unknown check id: {0}")]
    UnknownCheck(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
