use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid argument outside the mathematical domain of an operation
    /// (index 0, z outside [0,1], strategy/spec mismatch, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// The tilted parameters violate a summability constraint, e.g. a
    /// multiset with theta * x >= 1.
    #[error("parameter domain error: {0}")]
    Parameter(String),

    /// A numeric guard tripped: acceptance underflow, cancellation in a
    /// signed recursion, quadrature or root bracketing failure.
    #[error("numeric guard: {0}")]
    Numeric(String),

    /// Conditioning on an event of probability zero.
    #[error("zero conditioning probability: {0}")]
    ZeroProbability(String),

    /// Enumeration cap exceeded in the exact oracle.
    #[error("enumeration cap exceeded: n = {n} > cap = {cap}")]
    CapExceeded { n: usize, cap: usize },

    #[error("invalid structure spec: {0}")]
    Spec(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
