use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("invalid boundary partition: {0}")]
    InvalidPartition(String),
    #[error("alpha = {alpha} outside the admissible range [{min}, {max}]")]
    AlphaOutOfRange { alpha: f64, min: f64, max: f64 },
    #[error("grid with {n} nodes per axis is too coarse (need at least 3)")]
    TooCoarse { n: usize },
    #[error("the Dirichlet set is empty; the first eigenvalue would vanish")]
    EmptyDirichletSet,
    #[error("eigensolver did not converge after {iterations} iterations (max residual {residual:.3e}): {detail}")]
    ConvergenceFailure {
        iterations: usize,
        residual: f64,
        detail: String,
    },
    #[error("basis mismatch: expected {expected} values, found {found}")]
    BasisMismatch { expected: usize, found: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("critical exponent undefined: N = {dim} <= 2s = {}", 2.0 * s)]
    SubcriticalDimension { dim: usize, s: f64 },
    #[error("grading exponent {0} must be >= 1")]
    BadGrading(f64),
    #[error("conjugate gradient stalled after {iterations} iterations (relative residual {residual:.3e})")]
    SolverDivergence { iterations: usize, residual: f64 },
    #[error("exponent p = {p} must exceed N/(2s) = {min}")]
    ExponentViolation { p: f64, min: f64 },
    #[error("ball of radius {radius} contains no grid node")]
    EmptyBall { radius: f64 },
    #[error("oscillation profile is degenerate: {0}")]
    DegenerateProfile(String),
    #[error("bad iteration exponent: {0}")]
    BadExponent(String),
    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },
    #[error("missing required config field `{0}`")]
    MissingField(String),
    #[error("no rows to emit")]
    NoData,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
