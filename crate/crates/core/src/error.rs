use thiserror::Error;

/// Errors raised by model construction, filtering and the solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("prior is supported on {{1, 2, ...}}, got j = 0")]
    ZeroDisorderTime,

    #[error("path starts at symbol {found}, model starts at {expected}")]
    InitialStateMismatch { expected: usize, found: usize },

    #[error("symbol {symbol} out of range for alphabet of size {size}")]
    SymbolOutOfRange { symbol: usize, size: usize },

    #[error("observation {from} -> {to} is impossible under both regimes")]
    ImpossibleObservation { from: usize, to: usize },

    #[error("invalid game: {0}")]
    InvalidGame(String),

    #[error("quota {quota} unattainable with total weight {total}")]
    QuotaUnattainable { quota: u64, total: u64 },

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("instance too large: {what} needs {required}, cap is {cap}")]
    SizeCap {
        what: &'static str,
        required: f64,
        cap: f64,
    },

    #[error("exact tree needs {bits:.2} bits (cap {cap}): {nodes} nodes")]
    TreeTooLarge { bits: f64, cap: f64, nodes: f64 },

    #[error("state {state} outside the profile domain of {states} states")]
    StateOutOfDomain { state: usize, states: usize },

    #[error("{0}")]
    Unsupported(String),

    #[error("absorption system is singular: {0}")]
    SingularSystem(String),
}

pub type Result<T> = std::result::Result<T, Error>;
