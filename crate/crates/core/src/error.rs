use thiserror::Error;

use crate::solver::NotConverged;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised while loading or validating calibration data.
///
/// The three variants map to the three failure classes a caller may want to
/// tell apart: malformed JSON, a well-formed document with the wrong shape,
/// and matrices that are not column-stochastic.
#[derive(Debug, Error)]
pub enum CalibrationError {
    #[error("calibration parse error: {0}")]
    Parse(String),
    #[error("calibration schema error: {0}")]
    Schema(String),
    #[error("calibration validation error: {0}")]
    Validation(String),
    #[error("calibration i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("bit-string width must be at least 1")]
    ZeroWidth,
    #[error("width mismatch: expected {expected} bits, found {found}")]
    WidthMismatch { expected: usize, found: usize },
    #[error("invalid bit-string {0:?}: only '0' and '1' are allowed")]
    InvalidBitString(String),
    #[error("distribution is empty")]
    EmptyDistribution,
    #[error("count for {0} must be positive")]
    ZeroCount(String),
    #[error("weights sum to {sum}, expected 1 within {tol:e}")]
    NotNormalized { sum: f64, tol: f64 },
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid counts document: {0}")]
    Counts(String),
    #[error(transparent)]
    Calibration(#[from] CalibrationError),
    #[error("correlated element requires pairwise calibrations for all qubit pairs")]
    NotCorrelated,
    #[error("bit-string {0} is not part of the reduced basis")]
    NotInBasis(String),
    #[error("column {0} has zero norm; calibration column is all zeros within the basis")]
    ZeroColumnNorm(String),
    #[error("{qubits} qubits exceeds the brute-force limit of {limit}")]
    BruteForceLimit { qubits: usize, limit: usize },
    #[error("arithmetic overflow: {0}")]
    Overflow(&'static str),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("direct solve requires dense storage")]
    RequiresDense,
    #[error("reduced assignment matrix of dimension {dim} at distance {distance} is singular")]
    Singular { dim: usize, distance: usize },
    #[error("{0}")]
    NotConverged(Box<NotConverged>),
    #[error("invalid operator spec {spec:?}: {reason}")]
    InvalidOperator { spec: String, reason: String },
    #[error("eigenvalue {0} outside [-1, 1]")]
    EigenvalueOutOfRange(f64),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by malformed or inconsistent inputs, as opposed
    /// to numerical failure or I/O.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::ZeroWidth
                | Error::WidthMismatch { .. }
                | Error::InvalidBitString(_)
                | Error::EmptyDistribution
                | Error::ZeroCount(_)
                | Error::NotNormalized { .. }
                | Error::InvalidDistribution(_)
                | Error::Counts(_)
                | Error::Calibration(
                    CalibrationError::Parse(_)
                        | CalibrationError::Schema(_)
                        | CalibrationError::Validation(_)
                )
                | Error::NotCorrelated
                | Error::NotInBasis(_)
                | Error::ZeroColumnNorm(_)
                | Error::InvalidArgument(_)
                | Error::DimensionMismatch { .. }
                | Error::InvalidOperator { .. }
                | Error::EigenvalueOutOfRange(_)
                | Error::Json(_)
        )
    }
}
