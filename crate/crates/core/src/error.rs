use thiserror::Error;

/// Error type shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violates a documented precondition.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// The input is syntactically fine but outside the physical domain of the
    /// operation (e.g. zero separation where a superposition is required).
    #[error("domain error: {0}")]
    Domain(String),

    /// Two sampled quantities live on incompatible grids.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// The wavefunction reached the edge of the spatial domain.
    #[error("containment violation: {0}")]
    Containment(String),

    /// The requested resolution cannot represent the result; rerun on a finer
    /// grid.
    #[error("refinement required: {0}")]
    RefinementRequired(String),

    /// Statistics requested from an ensemble too small to support them.
    #[error("statistics warning: {0}")]
    Statistics(String),

    /// Unknown scenario or malformed run configuration.
    #[error("configuration error: {0}")]
    Configuration(String),

    /// Invariant breakage that indicates a bug rather than bad input.
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
