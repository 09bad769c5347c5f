use thiserror::Error;

/// Errors raised across the solver toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("space has no points")]
    EmptySpace,
    #[error("distance matrix is not a metric: {0}")]
    NonMetric(String),
    #[error("cost exponent must be >= 1, got {0}")]
    BadExponent(f64),
    #[error("invalid cost matrix: {0}")]
    BadCost(String),
    #[error("interval [{a}, {b}] is empty or not finite")]
    BadInterval { a: f64, b: f64 },
    #[error("grid needs at least 2 points, got {0}")]
    BadCount(usize),
    #[error("index {index} out of range for a space of {n} points")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("map sends {from} to {to}, outside a space of {n} points")]
    BadMap { from: usize, to: usize, n: usize },
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("invalid coupling: {0}")]
    InvalidCoupling(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("empty argmin set at source {0}")]
    EmptyArgmin(usize),
    #[error("recovery infeasible: budget {r} outside [{c_lo}, {c_hi}]")]
    InfeasibleRecovery { r: f64, c_lo: f64, c_hi: f64 },
    #[error("certificate clause ({clause}) failed: {detail}")]
    CertificateFailure { clause: String, detail: String },
    #[error("parse error at line {line}, column {column}: {message}")]
    ParseError {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema error: {0}")]
    SchemaError(String),
    #[error("validation error: {0}")]
    ValidationError(String),
}

pub type Result<T> = std::result::Result<T, Error>;
