//! Statevector toolkit for pulse-derived two-qubit entanglers.
//!
//! The crate builds entangling unitaries from a calibrated cross-resonance
//! Hamiltonian, recovers that Hamiltonian from simulated tomography data,
//! assembles layered hardware-efficient ansatze around either CNOT or the
//! pulse-derived gates, and measures them: expressibility, bipartite
//! entanglement entropy, gradient variance, and VQE performance under SPSA.
//!
//! Basis ordering is fixed crate-wide: qubit 0 is the most significant bit
//! of an amplitude index, and bitstrings are always written qubit 0 first.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cr;
pub mod descriptors;
pub mod error;
pub mod pqc;
pub mod sim;
pub mod tomography;
pub mod vqe;

mod seeding;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Version string embedded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
