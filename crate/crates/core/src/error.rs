use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("horizon mismatch: {left} vs {right}")]
    HorizonMismatch { left: f64, right: f64 },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("incompatible grids: {0}")]
    IncompatibleGrids(String),

    #[error("positivity violation at step {step}: factor {factor}")]
    PositivityViolation { step: usize, factor: f64 },

    #[error("non-positive price {price} at index {index}")]
    NonPositivePrice { index: usize, price: f64 },

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    #[error("strategy is not admissible for capital {capital}")]
    Inadmissible { capital: f64 },

    #[error("incomplete market: successors coincide at level {level}, node {node}")]
    IncompleteMarket { level: usize, node: usize },

    #[error("partition at level {level} is not a coarsening of the tree filtration")]
    NotCoarsening { level: usize },

    #[error("invalid density: {0}")]
    InvalidDensity(String),

    #[error("precondition violated: {0}")]
    Precondition(String),
}

impl Error {
    /// True for errors caused by configured size limits rather than bad input.
    pub fn is_resource_limit(&self) -> bool {
        matches!(self, Error::ResourceLimit(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
