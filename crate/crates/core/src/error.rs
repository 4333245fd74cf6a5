//! Error and result types shared across the crate.

use thiserror::Error;

/// Everything that can go wrong, coarsely bucketed by how the caller should
/// react (the CLI maps each variant to a distinct exit code).
#[derive(Debug, Error)]
pub enum Error {
    /// Input text could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),

    /// The given endomorphism is not an automorphism, or could not be
    /// certified as one within the search budget.
    #[error("not an automorphism: {0}")]
    NotAutomorphism(String),

    /// The outer automorphism is reducible (or the transition matrix fails
    /// irreducibility/primitivity), so the requested invariants are undefined.
    #[error("not fully irreducible: {0}")]
    NotIrreducible(String),

    /// A search or certification exhausted its budget before reaching a
    /// verdict; the result is unknown rather than false.
    #[error("indeterminate: {0}")]
    Indeterminate(String),

    /// An internal cross-check failed. Either a bug or a violated
    /// mathematical precondition; never silently ignored.
    #[error("internal inconsistency: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
