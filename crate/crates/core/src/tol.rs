//! Numerical tolerances shared by every module.
//!
//! All values assume double precision and total dimensions up to 81.

/// Entrywise Hermiticity tolerance.
pub const TOL_HERM: f64 = 1e-12;

/// Tolerance on the Euclidean norm of pure vectors.
pub const TOL_NORM: f64 = 1e-12;

/// Membership and geometry tolerance used by the cone oracles.
pub const TOL: f64 = 1e-9;

/// Spectral reconstruction tolerance (Frobenius norm).
pub const TOL_SPEC: f64 = 1e-10;
