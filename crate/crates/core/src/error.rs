use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum IgaError {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("parameter {value} outside domain [{lo}, {hi}]")]
    Domain { value: f64, lo: f64, hi: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is singular (zero pivot at column {column})")]
    Singular { column: usize },

    #[error("matrix is not positive definite (pivot {pivot} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("eigenvalue iteration did not converge: {0}")]
    NoConvergence(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("non-positive lumped mass {value} at row {row}")]
    NonPositiveLumpedMass { row: usize, value: f64 },

    #[error("time integration became unstable at step {step} (t = {time})")]
    Instability { step: usize, time: f64 },

    #[error("invalid combination: {0}")]
    InvalidCombination(String),
}

pub type Result<T, E = IgaError> = std::result::Result<T, E>;

impl IgaError {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        IgaError::Input(msg.into())
    }

    /// True for failures of the numerics (singularity, instability, divergence)
    /// as opposed to invalid user input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            IgaError::Singular { .. }
                | IgaError::NotPositiveDefinite { .. }
                | IgaError::NoConvergence(_)
                | IgaError::NonPositiveLumpedMass { .. }
                | IgaError::Instability { .. }
                | IgaError::Geometry(_)
        )
    }
}
