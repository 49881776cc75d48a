use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::matrix::Unitary;
use crate::{Error, Result};

/// Pure state of `n_qubits` qubits, qubit 0 as the most significant bit.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

impl StateVector {
    /// `|0…0⟩`.
    pub fn zero(n_qubits: usize) -> Self {
        Self::basis(n_qubits, 0)
    }

    /// Computational basis state with the given amplitude index.
    pub fn basis(n_qubits: usize, index: usize) -> Self {
        let dim = 1usize << n_qubits;
        assert!(index < dim, "basis index {index} out of range");
        let mut amplitudes = vec![ZERO; dim];
        amplitudes[index] = ONE;
        StateVector { n_qubits, amplitudes }
    }

    /// Basis state from a qubit-0-first bitstring such as `"01"`.
    pub fn from_bitstring(bits: &str) -> Result<Self> {
        let n = bits.len();
        if n == 0 {
            return Err(Error::invalid("empty bitstring"));
        }
        let index = usize::from_str_radix(bits, 2)
            .map_err(|_| Error::invalid(format!("not a bitstring: {bits:?}")))?;
        Ok(Self::basis(n, index))
    }

    /// Wraps normalised amplitudes; the length must be a power of two.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let dim = amplitudes.len();
        if dim < 2 || !dim.is_power_of_two() {
            return Err(Error::Dimension(format!(
                "amplitude count {dim} is not a power of two >= 2"
            )));
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > super::NORM_TOL {
            return Err(Error::invalid(format!("state norm² is {norm}, expected 1")));
        }
        Ok(StateVector {
            n_qubits: dim.trailing_zeros() as usize,
            amplitudes,
        })
    }

    /// Normalises arbitrary nonzero amplitudes.
    pub fn normalized(mut amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::invalid("cannot normalise a zero or non-finite vector"));
        }
        amplitudes.iter_mut().for_each(|a| *a /= norm);
        Self::from_amplitudes(amplitudes)
    }

    /// Haar-random state (normalised complex Gaussian vector).
    pub fn haar_random<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> Self {
        let amps = (0..1usize << n_qubits)
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        Self::normalized(amps).expect("gaussian vector is nonzero")
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        assert_eq!(self.dim(), other.dim());
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &StateVector) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// Formats a basis index as a qubit-0-first bitstring.
    pub fn bitstring(&self, index: usize) -> String {
        format!("{:0width$b}", index, width = self.n_qubits)
    }

    /// Applies `u` to `targets` in place; `targets[0]` meets the first
    /// tensor factor of `u`.
    pub fn apply(&mut self, u: &Unitary, targets: &[usize]) -> Result<()> {
        self.check_targets(u, targets)?;
        let m = u.matrix();
        match targets.len() {
            1 => {
                let g = [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]];
                self.apply_1q(&g, targets[0]);
            }
            _ => self.apply_kq(u, targets),
        }
        Ok(())
    }

    fn check_targets(&self, u: &Unitary, targets: &[usize]) -> Result<()> {
        if u.dim() != 1usize << targets.len() {
            return Err(Error::Dimension(format!(
                "{}x{} unitary cannot act on {} target(s)",
                u.dim(),
                u.dim(),
                targets.len()
            )));
        }
        for (i, &t) in targets.iter().enumerate() {
            if t >= self.n_qubits {
                return Err(Error::QubitOutOfRange {
                    index: t,
                    n_qubits: self.n_qubits,
                });
            }
            if targets[..i].contains(&t) {
                return Err(Error::DuplicateQubit(t));
            }
        }
        Ok(())
    }

    #[inline]
    fn mask(&self, qubit: usize) -> usize {
        1usize << (self.n_qubits - 1 - qubit)
    }

    /// Strided single-qubit kernel; caller has validated `qubit`.
    pub(crate) fn apply_1q(&mut self, g: &[[Complex64; 2]; 2], qubit: usize) {
        let stride = self.mask(qubit);
        let amps = &mut self.amplitudes;
        for block in (0..amps.len()).step_by(stride << 1) {
            for i in block..block + stride {
                let a0 = amps[i];
                let a1 = amps[i + stride];
                amps[i] = g[0][0] * a0 + g[0][1] * a1;
                amps[i + stride] = g[1][0] * a0 + g[1][1] * a1;
            }
        }
    }

    /// Gather/scatter kernel for k ≥ 2 targets.
    fn apply_kq(&mut self, u: &Unitary, targets: &[usize]) {
        let k = targets.len();
        let local_dim = 1usize << k;
        let masks: Vec<usize> = targets.iter().map(|&t| self.mask(t)).collect();
        let all_targets: usize = masks.iter().sum();
        let offsets: Vec<usize> = (0..local_dim)
            .map(|j| {
                (0..k)
                    .filter(|&m| j >> (k - 1 - m) & 1 == 1)
                    .map(|m| masks[m])
                    .sum()
            })
            .collect();
        let m = u.matrix();
        let mut buf = vec![ZERO; local_dim];
        for base in 0..self.amplitudes.len() {
            if base & all_targets != 0 {
                continue;
            }
            for (j, &off) in offsets.iter().enumerate() {
                buf[j] = self.amplitudes[base + off];
            }
            for (r, &off) in offsets.iter().enumerate() {
                let mut acc = ZERO;
                for (col, b) in buf.iter().enumerate() {
                    acc += m[(r, col)] * b;
                }
                self.amplitudes[base + off] = acc;
            }
        }
    }
}

/// Returns `U` applied to `targets` of `state`, identity elsewhere.
pub fn apply_unitary(state: &StateVector, u: &Unitary, targets: &[usize]) -> Result<StateVector> {
    let mut out = state.clone();
    out.apply(u, targets)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{cnot, hadamard, kron, pauli_matrix, rotation_gate, Pauli};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn x_gate() -> Unitary {
        Unitary::new(pauli_matrix(Pauli::X)).unwrap()
    }

    #[test]
    fn x_on_qubit_zero_flips_msb() {
        let s = apply_unitary(&StateVector::zero(2), &x_gate(), &[0]).unwrap();
        assert_eq!(s, StateVector::from_bitstring("10").unwrap());
    }

    #[test]
    fn cnot_control_zero_target_one() {
        let s = StateVector::from_bitstring("10").unwrap();
        let s = apply_unitary(&s, &cnot(), &[0, 1]).unwrap();
        assert_eq!(s, StateVector::from_bitstring("11").unwrap());
        // reversed target order swaps the roles
        let s = StateVector::from_bitstring("01").unwrap();
        let s = apply_unitary(&s, &cnot(), &[1, 0]).unwrap();
        assert_eq!(s, StateVector::from_bitstring("11").unwrap());
    }

    #[test]
    fn hadamard_pair_gives_uniform_amplitudes() {
        let hh = kron(&hadamard(), &hadamard());
        let s = apply_unitary(&StateVector::zero(2), &hh, &[0, 1]).unwrap();
        for a in s.amplitudes() {
            assert!((a - Complex64::new(0.5, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn non_adjacent_two_qubit_matches_kron_embedding() {
        // CNOT(0 -> 2) on 3 qubits versus the explicit permutation
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = StateVector::haar_random(3, &mut rng);
        let out = apply_unitary(&s, &cnot(), &[0, 2]).unwrap();
        for idx in 0..8usize {
            let src = if idx & 0b100 != 0 { idx ^ 0b001 } else { idx };
            assert!((out.amplitudes()[idx] - s.amplitudes()[src]).norm() < 1e-15);
        }
    }

    #[test]
    fn target_validation() {
        let s = StateVector::zero(2);
        assert!(matches!(
            apply_unitary(&s, &cnot(), &[0, 0]),
            Err(Error::DuplicateQubit(0))
        ));
        assert!(matches!(
            apply_unitary(&s, &x_gate(), &[2]),
            Err(Error::QubitOutOfRange { .. })
        ));
        assert!(matches!(apply_unitary(&s, &cnot(), &[0]), Err(Error::Dimension(_))));
    }

    #[test]
    fn norm_preserved_on_nine_qubits() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut s = StateVector::haar_random(9, &mut rng);
        let u = kron(&rotation_gate(Pauli::Y, 0.4), &rotation_gate(Pauli::X, 1.3));
        s.apply(&u, &[7, 2]).unwrap();
        s.apply(&cnot(), &[4, 8]).unwrap();
        assert!((s.norm_sqr() - 1.0).abs() < 1e-10);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn random_gates_preserve_norm(seed in any::<u64>(), a in 0usize..5, b in 0usize..5,
                                      t1 in -7.0f64..7.0, t2 in -7.0f64..7.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut s = StateVector::haar_random(5, &mut rng);
            s.apply(&rotation_gate(Pauli::X, t1), &[a]).unwrap();
            if a != b {
                let u = kron(&rotation_gate(Pauli::Z, t2), &rotation_gate(Pauli::Y, t1))
                    .compose(&cnot()).unwrap();
                s.apply(&u, &[a, b]).unwrap();
            }
            prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-10);
        }
    }
}
