use thiserror::Error;

/// Errors produced by market construction, solvers and file handling.
#[derive(Debug, Error)]
pub enum Error {
    #[error("singular matrix: {0}")]
    SingularMatrix(String),

    #[error("matrix is not negative (semi)definite: {0}")]
    NotNegativeDefinite(String),

    #[error("eigensolver did not converge: {0}")]
    ConvergenceFailure(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid market: {0}")]
    InvalidMarket(String),

    #[error("risk aversion must be positive, got {0}")]
    InvalidRiskAversion(f64),

    #[error("sample count must be at least 2, got {0}")]
    InvalidSampleCount(usize),

    #[error("all eigenbundle quantities are zero")]
    AllQuantitiesZero,

    #[error("market is not strictly stable: {0}")]
    NotStrictlyStable(String),

    #[error("internal consistency check failed: {0}")]
    ConsistencyFailure(String),

    #[error("optimization failed: {0}")]
    OptimizationFailure(String),

    #[error("parameter out of range: {0}")]
    RangeError(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Stable machine-readable code, used in CLI diagnostics (`error[Code]: ...`).
    pub fn code(&self) -> &'static str {
        match self {
            Error::SingularMatrix(_) => "SingularMatrix",
            Error::NotNegativeDefinite(_) => "NotNegativeDefinite",
            Error::ConvergenceFailure(_) => "ConvergenceFailure",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::InvalidMarket(_) => "InvalidMarket",
            Error::InvalidRiskAversion(_) => "InvalidRiskAversion",
            Error::InvalidSampleCount(_) => "InvalidSampleCount",
            Error::AllQuantitiesZero => "AllQuantitiesZero",
            Error::NotStrictlyStable(_) => "NotStrictlyStable",
            Error::ConsistencyFailure(_) => "ConsistencyFailure",
            Error::OptimizationFailure(_) => "OptimizationFailure",
            Error::RangeError(_) => "RangeError",
            Error::Parse(_) => "Parse",
            Error::Io(_) => "Io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
