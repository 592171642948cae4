use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("degenerate assignment: N1 = {n1}, N0 = {n0} ({required})")]
    DegenerateAssignment {
        n1: usize,
        n0: usize,
        required: &'static str,
    },

    #[error("population size {n} exceeds the exhaustive-enumeration cap {cap}; use the Monte Carlo path")]
    EnumerationCapExceeded { n: usize, cap: usize },

    #[error("sample size {n} out of supported range [{min}, {max}]")]
    SampleSize { n: usize, min: usize, max: usize },

    #[error("sample has zero variance")]
    ConstantSample,

    #[error("redraw budget exhausted: {redraws} redraws exceeded budget {budget}")]
    RedrawBudgetExhausted { redraws: usize, budget: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
