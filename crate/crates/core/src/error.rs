use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("partial quotient a_{index} must be a positive integer")]
    InvalidQuotient { index: usize },

    #[error("input exhausted: convergent {requested} requested but only {available} partial quotients available")]
    InputExhausted { requested: usize, available: usize },

    #[error("index {index} out of range (valid: {min}..={max})")]
    IndexOutOfRange { index: usize, min: usize, max: usize },

    #[error("precision violation: n = {n} exceeds N_max = {n_max} for this angle")]
    PrecisionViolation { n: u64, n_max: u64 },

    #[error("frequency {m} lies outside the snapshot range (|m| must be < q_K* = {limit})")]
    OutOfSnapshot { m: String, limit: String },

    #[error("growth budget exceeded at k = {k}: {detail}")]
    GrowthBudget { k: usize, detail: String },

    #[error("memory budget exceeded: {required} bytes required, budget is {budget} bytes")]
    MemoryBudget { required: u64, budget: u64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("resonant frequency {m} in a coboundary input (small divisor may vanish)")]
    ResonantFrequency { m: i64 },

    #[error("m_limit {m_limit} would alias on a {grid}-point grid")]
    Aliasing { m_limit: usize, grid: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("malformed document: {0}")]
    Format(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
