use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("index {index} out of range (available: {available})")]
    Range { index: usize, available: usize },
    #[error("insufficient precision to resolve floor(q*theta) at q = {q}")]
    Precision { q: u64 },
    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("degenerate model: {0}")]
    Degenerate(String),
    #[error("solver failure: {message}\n{diagnostic}")]
    Solver { message: String, diagnostic: String },
    #[error("branch tracking lost at parameter {parameter}: {message}")]
    Tracking { parameter: f64, message: String },
    #[error("ambiguous root selection: {0}")]
    Ambiguity(String),
    #[error("no validated trap: {0}")]
    NoTrap(String),
}

pub type Result<T> = std::result::Result<T, Error>;
