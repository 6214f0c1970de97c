//! Error taxonomy shared across the crate.

use thiserror::Error;

/// Everything that can go wrong in this crate.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Matrix dimension too small for the requested construction.
    #[error("size error: {0}")]
    Size(String),

    /// The query point is numerically on the critical curve a(S¹); root
    /// counts and contour integrals are unreliable there.
    #[error("point too close to the symbol curve (unit gap {gap:.3e} < tol {tol:.3e})")]
    OnCriticalCurve { gap: f64, tol: f64 },

    /// z collides with an eigenvalue of the circulant matrix.
    #[error("singular resolvent: {0}")]
    Singular(String),

    /// The residue path requires simple roots.
    #[error("repeated roots (min separation {sep:.3e}); use the quadrature path")]
    MultipleRoot { sep: f64 },

    /// Assembled covariance failed to be positive semidefinite beyond jitter.
    #[error("kernel error: {0}")]
    Kernel(String),

    /// A grid or window straddles distinct winding regions.
    #[error("region error: {0}")]
    Region(String),

    /// A zero of the sampled field sits on a counting-contour boundary.
    #[error("zero too close to a cell boundary (min |f| = {min_abs:.3e})")]
    BoundaryZero { min_abs: f64 },

    /// Argument-principle counts kept changing under boundary refinement.
    #[error("unstable winding count on cell boundary: {0}")]
    Precision(String),

    /// Backend linear-algebra failure (eigensolver, factorization).
    #[error("linear algebra backend: {0}")]
    Linalg(String),

    /// Malformed configuration or I/O problem in the harness.
    #[error("config error: {0}")]
    Config(String),
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Linalg(e.to_string())
    }
}
