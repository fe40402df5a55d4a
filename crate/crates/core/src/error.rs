use thiserror::Error;

/// Errors shared across the crate.
///
/// The split matters for callers: `Domain` and `Precondition` mean the inputs
/// are outside what the method supports, `PrecisionLoss` means the answer could
/// not be decided rigorously at the precision cap, and `Invariant` means a
/// certified internal check failed (which should be treated as a bug or as a
/// genuine counterexample, never ignored).
#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A stated precondition of a pipeline does not hold for the given instance.
    #[error("precondition failed: {0}")]
    Precondition(String),

    /// A strict comparison or branch choice could not be decided rigorously
    /// even at the precision cap. Never downgraded to a guess.
    #[error("indeterminate at precision cap: {0}")]
    PrecisionLoss(String),

    /// An exactness certificate failed (integrality, conjugacy, nonvanishing, ...).
    #[error("invariant violated: {0}")]
    Invariant(String),

    /// A number was too large to factor with the built-in trial division.
    #[error("factorization limit exceeded for {0}")]
    FactorLimit(String),

    /// Malformed configuration or argument structure.
    #[error("invalid input: {0}")]
    Input(String),
}

pub type Result<T> = std::result::Result<T, Error>;
