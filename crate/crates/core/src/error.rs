use thiserror::Error;

/// Failures raised by the numerical kernels and file readers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate curve: {0}")]
    DegenerateCurve(String),
    #[error("curve is not simple: segments {0} and {1} intersect")]
    SelfIntersection(usize, usize),
    #[error("zero signed area, orientation undefined")]
    ZeroArea,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("grid mismatch: expected {expected} points, got {got}")]
    GridMismatch { expected: usize, got: usize },
    #[error("tensor is not symmetric (|b_{i}{j} - b_{j}{i}| = {gap:e})")]
    NotSymmetric { i: usize, j: usize, gap: f64 },
    #[error("metric is not positive definite")]
    NotPositiveDefinite,
    #[error("grid too coarse: m = {got}, need at least {min}")]
    GridTooCoarse { got: usize, min: usize },
    #[error("invalid reparametrization: {0}")]
    InvalidReparametrization(String),
    #[error("length mismatch: map expects {expected}, curve has {got}")]
    LengthMismatch { expected: f64, got: f64 },
    #[error("regime violation: {0}")]
    Regime(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// True for precondition failures that stem from the lengths regime rather
    /// than malformed data.
    pub fn is_regime(&self) -> bool {
        matches!(self, Error::Regime(_) | Error::LengthMismatch { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
