//! Error type shared by the core modules.

use thiserror::Error;

/// Errors produced by construction, validation, and the optimization loops.
#[derive(Debug, Error)]
pub enum CoreError {
    /// Array or matrix dimensions do not agree.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A grid definition violates its invariants (ordering, spacing, Nyquist).
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    /// A scalar or structural parameter is out of its documented range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A matrix expected to be symmetric/Hermitian is not, within tolerance.
    #[error("matrix not hermitian: {0}")]
    NotHermitian(String),

    /// A state vector is not normalized within tolerance.
    #[error("state not normalized: {0}")]
    NotNormalized(String),

    /// A linear solve or eigendecomposition failed.
    #[error("linear algebra failure: {0}")]
    LinearAlgebra(String),

    /// An objective or gradient evaluated to a non-finite value.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// A constrained run could not be started or kept feasible.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// Objective evaluation failed inside an optimizer loop.
    #[error("objective evaluation failed at {context}: {source}")]
    Evaluation {
        context: String,
        #[source]
        source: Box<CoreError>,
    },
}

impl CoreError {
    /// Wraps an evaluation failure with loop context (generation, index, ...).
    pub fn in_context(self, context: impl Into<String>) -> Self {
        CoreError::Evaluation {
            context: context.into(),
            source: Box::new(self),
        }
    }
}
