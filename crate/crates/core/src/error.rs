use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("matrix `{name}` is not symmetric positive definite")]
    NotPositiveDefinite { name: String },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("covariance is singular at t = {t} (condition number {cond:e})")]
    Singular { t: f64, cond: f64 },
    #[error("schedule derivative is undefined at t = {t}")]
    UndefinedDerivative { t: f64 },
    #[error("supports are not disconnected: {0}")]
    NotDisconnected(String),
    #[error("operation requires Gaussian endpoints and auxiliary law")]
    NonGaussian,
    #[error("grid too coarse: need at least {need} nodes, got {got}")]
    GridTooCoarse { need: usize, got: usize },
    #[error("point lies outside the field domain")]
    OutsideDomain,
    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
