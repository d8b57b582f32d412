use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SystoleError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is not positive definite (det = {det})")]
    NotPositiveDefinite { det: f64 },

    #[error("quadrature did not converge: estimate {estimate}, error estimate {error} > tolerance {tolerance}")]
    QuadratureNonConvergence { estimate: f64, error: f64, tolerance: f64 },

    #[error("resolution too coarse: {0}")]
    ResolutionTooCoarse(String),

    #[error("overlapping neighborhoods: {0}")]
    OverlappingNeighborhoods(String),

    #[error("linear program failed: {0}")]
    LinearProgram(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for SystoleError {
    fn from(e: std::io::Error) -> Self {
        SystoleError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, SystoleError>;
