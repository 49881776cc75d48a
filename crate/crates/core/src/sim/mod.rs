//! Dense statevector primitives.

mod density;
mod eigen;
mod matrix;
mod pauli;
mod state;

pub use density::{partial_trace, von_neumann_entropy, DensityMatrix};
pub use eigen::{exact_minimum_eigenvalue, hermitian_eigen, MAX_DENSE_QUBITS};
pub use matrix::{
    cnot, cz, hadamard, identity, kron, max_abs_diff, pauli_matrix, rotation_gate, CMatrix, Unitary,
};
pub use pauli::{parity_estimate, sample_counts, Pauli, PauliString, PauliSum};
pub use state::{apply_unitary, StateVector};

/// Tolerance on the norm of a state after any operation.
pub const NORM_TOL: f64 = 1e-10;
