use thiserror::Error;

/// Errors raised by the simulation and analysis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Physical parameters that violate a model invariant.
    #[error("configuration error: {0}")]
    Configuration(String),

    /// The gyromagnetic ratios are equal, so the detuning is field independent.
    #[error("degenerate gyromagnetic ratios: gamma_a = gamma_b = {0}")]
    DegenerateRatio(f64),

    /// A linear solve hit a (numerically) singular matrix.
    #[error("singular system: {0}")]
    Singular(String),

    /// Grids, curves or samples that cannot be used by an operation.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A curve with no usable structure (flat, or zero reference response).
    #[error("degenerate data: {0}")]
    Degenerate(String),

    /// An operation was called with a drive mode it does not accept.
    #[error("contract violation: {0}")]
    Contract(String),
}

pub type Result<T> = std::result::Result<T, Error>;
