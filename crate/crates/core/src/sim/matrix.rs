use nalgebra::DMatrix;
use num_complex::Complex64;

use super::pauli::Pauli;
use crate::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

const UNITARY_TOL: f64 = 1e-9;

/// A square unitary whose dimension is a power of two.
///
/// The first tensor factor acts on the most significant qubit, so a
/// two-qubit gate `kron(a, b)` applies `a` to its first target.
#[derive(Debug, Clone, PartialEq)]
pub struct Unitary {
    m: CMatrix,
}

impl Unitary {
    /// Wraps `m`, checking squareness, power-of-two size and `U†U = I`.
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() || !m.nrows().is_power_of_two() || m.nrows() < 2 {
            return Err(Error::Dimension(format!(
                "unitary must be square with power-of-two size >= 2, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let dev = unitarity_deviation(&m);
        if dev > UNITARY_TOL {
            return Err(Error::NotUnitary(dev));
        }
        Ok(Unitary { m })
    }

    pub(crate) fn from_matrix_unchecked(m: CMatrix) -> Self {
        debug_assert!(unitarity_deviation(&m) < 1e-7);
        Unitary { m }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn n_qubits(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    pub fn adjoint(&self) -> Unitary {
        Unitary { m: self.m.adjoint() }
    }

    /// Matrix product `self · rhs`.
    pub fn compose(&self, rhs: &Unitary) -> Result<Unitary> {
        if self.dim() != rhs.dim() {
            return Err(Error::Dimension(format!(
                "cannot compose {}x{} with {}x{}",
                self.dim(),
                self.dim(),
                rhs.dim(),
                rhs.dim()
            )));
        }
        Ok(Unitary::from_matrix_unchecked(&self.m * &rhs.m))
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.m[(row, col)]
    }

    /// Largest entrywise distance to `other`.
    pub fn max_abs_diff(&self, other: &Unitary) -> f64 {
        max_abs_diff(&self.m, &other.m)
    }
}

/// Largest entrywise distance between two matrices of equal shape.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn unitarity_deviation(m: &CMatrix) -> f64 {
    let prod = m.adjoint() * m;
    let id = CMatrix::identity(m.nrows(), m.ncols());
    max_abs_diff(&prod, &id)
}

/// Kronecker product `a ⊗ b`, `a` on the more significant qubits.
pub fn kron(a: &Unitary, b: &Unitary) -> Unitary {
    Unitary::from_matrix_unchecked(a.m.kronecker(&b.m))
}

pub fn identity(n_qubits: usize) -> Unitary {
    let d = 1usize << n_qubits;
    Unitary::from_matrix_unchecked(CMatrix::identity(d, d))
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn mat2(entries: [Complex64; 4]) -> CMatrix {
    CMatrix::from_row_slice(2, 2, &entries)
}

/// The 2x2 matrix of a single-qubit Pauli.
pub fn pauli_matrix(p: Pauli) -> CMatrix {
    let o = c(0.0, 0.0);
    let l = c(1.0, 0.0);
    match p {
        Pauli::I => mat2([l, o, o, l]),
        Pauli::X => mat2([o, l, l, o]),
        Pauli::Y => mat2([o, c(0.0, -1.0), c(0.0, 1.0), o]),
        Pauli::Z => mat2([l, o, o, -l]),
    }
}

/// `exp(-i·angle·P/2)` for `P ∈ {X, Y, Z}`.
pub fn rotation_gate(axis: Pauli, angle: f64) -> Unitary {
    let (s, co) = (angle / 2.0).sin_cos();
    let m = match axis {
        Pauli::I => mat2([c(co, -s), c(0.0, 0.0), c(0.0, 0.0), c(co, -s)]),
        Pauli::X => mat2([c(co, 0.0), c(0.0, -s), c(0.0, -s), c(co, 0.0)]),
        Pauli::Y => mat2([c(co, 0.0), c(-s, 0.0), c(s, 0.0), c(co, 0.0)]),
        Pauli::Z => mat2([c(co, -s), c(0.0, 0.0), c(0.0, 0.0), c(co, s)]),
    };
    Unitary::from_matrix_unchecked(m)
}

pub fn hadamard() -> Unitary {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    Unitary::from_matrix_unchecked(mat2([c(h, 0.0), c(h, 0.0), c(h, 0.0), c(-h, 0.0)]))
}

/// CNOT with the first tensor factor as control.
pub fn cnot() -> Unitary {
    let mut m = CMatrix::zeros(4, 4);
    m[(0, 0)] = c(1.0, 0.0);
    m[(1, 1)] = c(1.0, 0.0);
    m[(2, 3)] = c(1.0, 0.0);
    m[(3, 2)] = c(1.0, 0.0);
    Unitary::from_matrix_unchecked(m)
}

pub fn cz() -> Unitary {
    let mut m = CMatrix::identity(4, 4);
    m[(3, 3)] = c(-1.0, 0.0);
    Unitary::from_matrix_unchecked(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn kron_of_identities_is_identity() {
        assert_eq!(kron(&identity(1), &identity(1)), identity(2));
    }

    #[test]
    fn kron_z_x_has_signed_x_blocks() {
        let z = Unitary::new(pauli_matrix(Pauli::Z)).unwrap();
        let x = Unitary::new(pauli_matrix(Pauli::X)).unwrap();
        let zx = kron(&z, &x);
        let px = pauli_matrix(Pauli::X);
        for r in 0..2 {
            for col in 0..2 {
                assert_eq!(zx.entry(r, col), px[(r, col)]);
                assert_eq!(zx.entry(r + 2, col + 2), -px[(r, col)]);
                assert_eq!(zx.entry(r, col + 2), c(0.0, 0.0));
                assert_eq!(zx.entry(r + 2, col), c(0.0, 0.0));
            }
        }
    }

    #[test]
    fn rotation_closed_forms() {
        assert!(rotation_gate(Pauli::Y, 0.0).max_abs_diff(&identity(1)) < 1e-15);
        let ry = rotation_gate(Pauli::Y, PI);
        // RY(π)|0⟩ = |1⟩
        assert!((ry.entry(1, 0) - c(1.0, 0.0)).norm() < 1e-15);
        assert!(ry.entry(0, 0).norm() < 1e-15);
        let t = 0.37;
        let rz = rotation_gate(Pauli::Z, t);
        assert!((rz.entry(0, 0) - Complex64::from_polar(1.0, -t / 2.0)).norm() < 1e-15);
        assert!((rz.entry(1, 1) - Complex64::from_polar(1.0, t / 2.0)).norm() < 1e-15);
        assert_eq!(rz.entry(0, 1), c(0.0, 0.0));
    }

    #[test]
    fn cnot_identities() {
        let id = identity(2);
        assert!(cnot().compose(&cnot()).unwrap().max_abs_diff(&id) < 1e-15);
        let ih = kron(&identity(1), &hadamard());
        let via_cz = ih.compose(&cz()).unwrap().compose(&ih).unwrap();
        assert!(via_cz.max_abs_diff(&cnot()) < 1e-15);
    }

    #[test]
    fn rejects_non_unitary() {
        let m = CMatrix::from_element(2, 2, c(1.0, 0.0));
        assert!(matches!(Unitary::new(m), Err(Error::NotUnitary(_))));
        let m = CMatrix::identity(3, 3);
        assert!(matches!(Unitary::new(m), Err(Error::Dimension(_))));
    }
}
