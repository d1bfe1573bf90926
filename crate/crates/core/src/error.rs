use faer::c64;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is singular to working precision ({dim}x{dim})")]
    SingularMatrix { dim: usize },

    #[error("{what} is singular at s = {s}, p = {p}")]
    SingularAt { what: &'static str, s: c64, p: f64 },

    #[error("SVD failed to converge for a {rows}x{cols} matrix")]
    SvdFailed { rows: usize, cols: usize },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("need at least 2 distinct parameters, got {0}")]
    TooFewParameters(usize),

    #[error("duplicate parameter value {0}")]
    DuplicateParameter(f64),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("truncation rank {r} is outside 1..={max}")]
    RankOutOfRange { r: usize, max: usize },

    #[error("unknown built-in model `{name}` (valid: {valid})")]
    UnknownBuiltin { name: String, valid: String },

    #[error("model has degree {degree}; {hint}")]
    Degree { degree: usize, hint: &'static str },

    #[error("both evaluation formulas failed at s = {s}, p = {p}: compact: {compact}; precise: {precise}")]
    EvaluationFailed {
        s: c64,
        p: f64,
        compact: String,
        precise: String,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
