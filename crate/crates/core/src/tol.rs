//! Numerical tolerances shared by every module.

/// Maximum entrywise deviation from Hermitian symmetry accepted on input.
pub const HERMITIAN: f64 = 1e-12;

/// Smallest eigenvalue still counted as nonnegative.
pub const PSD: f64 = 1e-10;

/// Eigendecomposition reconstruction error, per unit of dimension.
pub const RECONSTRUCTION: f64 = 1e-10;

/// Allowed deviation of ensemble probabilities (and density-operator traces) from 1.
pub const PROBABILITY_SUM: f64 = 1e-10;

/// Allowed deviation of a classical distribution's total mass from 1.
pub const DISTRIBUTION_SUM: f64 = 1e-12;

/// Entrywise tolerance on POVM completeness.
pub const POVM_COMPLETENESS: f64 = 1e-8;

/// Entrywise tolerance for two states to count as commuting.
pub const COMMUTATION: f64 = 1e-8;

/// Entrywise tolerance for ensemble equality.
pub const ENSEMBLE_EQUALITY: f64 = 1e-10;

/// Largest Hilbert-space dimension any operation will build.
pub const MAX_DIM: usize = 256;
