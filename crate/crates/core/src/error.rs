use alloc::string::String;

/// Errors produced by the numerical kernels.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument violated a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Fewer rows than the operation needs.
    #[error("insufficient samples: need at least {required}, got {actual}")]
    InsufficientSamples {
        /// Minimum number of samples.
        required: usize,
        /// Number of samples supplied.
        actual: usize,
    },

    /// The covariance is identically zero, so normalized eigenvalues (and the
    /// Gini index) are undefined.
    #[error("degenerate spectrum: covariance is zero, Gini index undefined")]
    DegenerateSpectrum,

    /// The Jacobi eigensolver hit its sweep cap.
    #[error("eigensolver did not converge after {sweeps} sweeps")]
    Convergence {
        /// Number of sweeps performed.
        sweeps: usize,
    },
}

/// Result alias used across the crate.
pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
