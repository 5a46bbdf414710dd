use thiserror::Error;

use crate::graph::Labeling;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("rates would be negative: lambda {lambda} outside [-1/(q-1), 1] for q = {q}")]
    NegativeRate { lambda: f64, q: usize },

    #[error("community sizes sum to {got}, expected {expected}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("label {label} out of range for q = {q}")]
    LabelOutOfRange { label: u32, q: usize },

    #[error("labeling has unassigned vertex {0}")]
    Unassigned(usize),

    #[error("labelings have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),

    #[error("walk length must be at least 1 (got {0})")]
    BadLength(usize),

    #[error("instance too large for exhaustive enumeration: {0}")]
    TooLarge(String),

    #[error("only {found} representative candidates for q = {q} (degree floor {floor})")]
    InsufficientCandidates { found: usize, q: usize, floor: usize },

    #[error("empty beta interval: lower {lower}, upper {upper}")]
    EmptyInterval { lower: f64, upper: f64 },

    #[error("belief propagation underflow: every label has zero weight")]
    NumericalUnderflow,

    #[error("search budget exhausted after {evaluations} evaluations")]
    BudgetExceeded { evaluations: u64, best: Labeling, objective: u64 },

    #[error("expected triangle counts differ by {gap:.3} < 1; the test has no power at this size")]
    DegenerateGap { gap: f64 },

    #[error("parameter out of range: {0}")]
    RangeError(String),

    #[error("config error: {0}")]
    ConfigError(String),

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
