//! Trace-distance security analysis for classical-quantum key ensembles.
//!
//! A key ensemble `{p(k), rho^k}` pairs each key value with the quantum state
//! an eavesdropper holds. This crate computes its distance `d` from an ideal
//! key, runs minimum-error attacks on the whole key, on subsets of bits and
//! with known plaintext, and evaluates the bounds that `d` guarantees for
//! those attacks.
//!
//! ```
//! use tdsec_core::{compute_d, build_locking_example, optimal_povm, SolverOptions};
//!
//! let ens = build_locking_example();
//! assert!((compute_d(&ens) - 0.5).abs() < 1e-12);
//! let best = optimal_povm(&ens, &SolverOptions::default()).unwrap();
//! assert!((best.result.success_prob.unwrap() - 0.5).abs() < 1e-6);
//! ```

pub mod attacks;
pub mod bounds;
pub mod casebook;
pub mod discrimination;
pub mod ensemble;
pub mod error;
pub mod io;
pub mod linalg;
pub mod tol;

pub use attacks::{compare_to_bounds, kpa_average, posterior_deviation, run_attack, AttackSpec, KpaReport, Target};
pub use bounds::{BoundReport, FailureBudget};
pub use discrimination::{
    evaluate_measurement, helstrom_binary, map_success_classical, optimal_povm, per_bit_optimal_ber,
    pretty_good_measurement, AttackResult, Measurement, Method, Povm, PovmElement, SolverOptions,
};
pub use ensemble::{
    build_biased_classical, build_locking_example, build_random_ensemble, compute_d, compute_d_joint, BitSubset,
    ClassicalDistribution, CqEnsemble, Entry, Key, Purity,
};
pub use error::{Error, Result};
pub use linalg::{HermitianMatrix, Matrix, C64};
