//! Spectral analysis of banded Toeplitz matrices under small random
//! perturbations.
//!
//! A banded Toeplitz matrix `T_n(a)` is determined by a Laurent-polynomial
//! symbol `a(λ) = Σ_{k=-r}^{s} a_k λ^k`. Adding noise `σ_n Y_n` with iid
//! entries of variance `1/n` moves the empirical spectrum onto the support of
//! an explicit limit measure, and sprinkles a handful of outlier eigenvalues
//! into the regions of the plane where the symbol curve `a(S¹)` has nonzero
//! winding. This crate provides the deterministic side of that picture
//! (region classification, the limit matrix `H(z)`, covariance kernels,
//! Szegő constants) together with samplers for the limiting random analytic
//! matrix field whose zeros predict the outliers, and a Monte-Carlo harness
//! that compares prediction against direct eigenvalue simulation.
//!
//! Organization:
//!
//! - [`symbol`]: Laurent symbols, root profiles, winding numbers.
//! - [`matgen`]: finite-n matrices (Toeplitz, circulant, Fourier, noise).
//! - [`multilinear`]: compound matrices, higher adjugates, det expansions.
//! - [`regions`]: support of the limit measure, Brown density, region map.
//! - [`limits`]: `H(z)`, covariance kernels, Szegő constants, rate lemmas.
//! - [`fields`]: random field samplers, zero finding, trace statistics.
//! - [`harness`]: experiment drivers, verification battery, report types.

pub mod error;
pub mod fields;
pub mod harness;
pub mod limits;
pub mod matgen;
pub mod multilinear;
pub mod quad;
pub mod regions;
pub mod symbol;

pub use error::Error;
pub use symbol::LaurentSymbol;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
