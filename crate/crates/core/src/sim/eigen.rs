use nalgebra::SymmetricEigen;

use super::matrix::CMatrix;
use super::pauli::PauliSum;
use super::state::StateVector;
use crate::{Error, Result};

/// Largest register accepted by the dense diagonalisation oracle.
pub const MAX_DENSE_QUBITS: usize = 12;

/// Eigenvalues (ascending) and matching eigenvector columns of a Hermitian matrix.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(m.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Smallest eigenvalue of `h` and a corresponding eigenvector.
///
/// Diagonal Hamiltonians are scanned directly; everything else goes
/// through a dense Hermitian eigensolve.
pub fn exact_minimum_eigenvalue(h: &PauliSum) -> Result<(f64, StateVector)> {
    let n = h.n_qubits();
    if n > MAX_DENSE_QUBITS {
        return Err(Error::TooManyQubits {
            what: "exact diagonalisation",
            n_qubits: n,
            limit: MAX_DENSE_QUBITS,
        });
    }
    if h.is_diagonal() {
        let (idx, val) = (0..1usize << n)
            .map(|i| (i, h.diagonal_entry(i)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty register");
        return Ok((val, StateVector::basis(n, idx)));
    }
    let (values, vectors) = hermitian_eigen(&h.to_dense());
    let amps = vectors.column(0).iter().copied().collect();
    Ok((values[0], StateVector::normalized(amps)?))
}
