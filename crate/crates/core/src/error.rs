use thiserror::Error;

/// Errors raised by the library. Consistency errors indicate a broken
/// identity or invariant and are treated as fatal by the CLI.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("value {value} exceeds the configured ceiling {ceiling}")]
    CeilingExceeded { value: u64, ceiling: u64 },

    #[error("sieve of limit {limit} needs {required_bytes} bytes, budget is {budget_bytes} bytes")]
    MemoryBudget {
        limit: u64,
        required_bytes: u64,
        budget_bytes: u64,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("factor table {label} index {index}: {message}")]
    Integrity { label: String, index: u64, message: String },

    #[error("consistency failure: {0}")]
    Consistency(String),

    #[error("did not converge: {0}")]
    NoConvergence(String),

    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },

    #[error("missing factor data for indices {0:?}")]
    MissingTables(Vec<u64>),
}

pub type Result<T> = std::result::Result<T, Error>;
