use nalgebra::DMatrix;
use num_complex::Complex64;

use super::eigen::hermitian_eigen;
use super::matrix::CMatrix;
use super::state::StateVector;
use crate::{Error, Result};

const HERMITIAN_TOL: f64 = 1e-10;

/// Reduced density matrix over a subset of qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    m: CMatrix,
}

impl DensityMatrix {
    /// Wraps `m` after checking it is square, Hermitian and unit-trace.
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Dimension("density matrix must be square".into()));
        }
        let dev = hermitian_deviation(&m);
        if dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian(dev));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > HERMITIAN_TOL || tr.im.abs() > HERMITIAN_TOL {
            return Err(Error::invalid(format!("density matrix trace {tr}, expected 1")));
        }
        Ok(DensityMatrix { m })
    }

    pub(crate) fn new_unchecked(m: CMatrix) -> Self {
        DensityMatrix { m }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn trace(&self) -> Complex64 {
        self.m.trace()
    }
}

fn hermitian_deviation(m: &CMatrix) -> f64 {
    let mut dev: f64 = 0.0;
    for r in 0..m.nrows() {
        for c in r..m.ncols() {
            dev = dev.max((m[(r, c)] - m[(c, r)].conj()).norm());
        }
    }
    dev
}

/// Traces out every qubit not in `keep`. The kept qubits retain their
/// relative order, lowest index most significant.
pub fn partial_trace(state: &StateVector, keep: &[usize]) -> Result<DensityMatrix> {
    let n = state.n_qubits();
    let mut keep: Vec<usize> = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    if keep.is_empty() || keep.len() >= n {
        return Err(Error::invalid(format!(
            "keep set must be a nonempty proper subset of {n} qubits"
        )));
    }
    if let Some(&q) = keep.iter().find(|&&q| q >= n) {
        return Err(Error::QubitOutOfRange { index: q, n_qubits: n });
    }
    let traced: Vec<usize> = (0..n).filter(|q| !keep.contains(q)).collect();
    let bit = |q: usize| 1usize << (n - 1 - q);
    let spread = |local: usize, qubits: &[usize]| -> usize {
        let k = qubits.len();
        qubits
            .iter()
            .enumerate()
            .filter(|(m, _)| local >> (k - 1 - m) & 1 == 1)
            .map(|(_, &q)| bit(q))
            .sum()
    };
    let dk = 1usize << keep.len();
    let de = 1usize << traced.len();
    let keep_off: Vec<usize> = (0..dk).map(|a| spread(a, &keep)).collect();
    let env_off: Vec<usize> = (0..de).map(|e| spread(e, &traced)).collect();
    let amps = state.amplitudes();
    // Ψ[a, e] = ψ[a ⊕ e]; ρ = Ψ Ψ†
    let psi = DMatrix::from_fn(dk, de, |a, e| amps[keep_off[a] | env_off[e]]);
    let rho = &psi * psi.adjoint();
    Ok(DensityMatrix::new_unchecked(rho))
}

/// `S = −Σ λ log₂ λ` in bits, with `0·log 0 = 0`; tiny negative results clamp to 0.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    let dev = hermitian_deviation(rho.matrix());
    if dev > 1e-8 {
        return Err(Error::NotHermitian(dev));
    }
    let (evals, _) = hermitian_eigen(rho.matrix());
    let s: f64 = evals
        .iter()
        .filter(|&&l| l > 1e-15)
        .map(|&l| -l * l.log2())
        .sum();
    Ok(s.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{apply_unitary, cnot, hadamard};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn ghz(n: usize) -> StateVector {
        let mut s = apply_unitary(&StateVector::zero(n), &hadamard(), &[0]).unwrap();
        for q in 1..n {
            s.apply(&cnot(), &[q - 1, q]).unwrap();
        }
        s
    }

    #[test]
    fn product_state_reduces_to_projector() {
        let s = StateVector::from_bitstring("01").unwrap();
        let rho = partial_trace(&s, &[0]).unwrap();
        assert_eq!(rho.matrix()[(0, 0)], c(1.0));
        assert_eq!(rho.matrix()[(1, 1)], c(0.0));
        let rho1 = partial_trace(&s, &[1]).unwrap();
        assert_eq!(rho1.matrix()[(1, 1)], c(1.0));
        assert!(von_neumann_entropy(&rho).unwrap().abs() < 1e-12);
    }

    #[test]
    fn bell_reduces_to_maximally_mixed() {
        let rho = partial_trace(&ghz(2), &[0]).unwrap();
        let half = CMatrix::identity(2, 2) * c(0.5);
        assert!(crate::sim::max_abs_diff(rho.matrix(), &half) < 1e-15);
        assert!((von_neumann_entropy(&rho).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ghz3_keep_two() {
        let rho = partial_trace(&ghz(3), &[0, 1]).unwrap();
        let mut expected = CMatrix::zeros(4, 4);
        expected[(0, 0)] = c(0.5);
        expected[(3, 3)] = c(0.5);
        assert!(crate::sim::max_abs_diff(rho.matrix(), &expected) < 1e-15);
    }

    #[test]
    fn maximally_mixed_two_qubits_has_two_bits() {
        let rho = DensityMatrix::new(CMatrix::identity(4, 4) * c(0.25)).unwrap();
        assert!((von_neumann_entropy(&rho).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_keep_sets() {
        let s = ghz(3);
        assert!(partial_trace(&s, &[]).is_err());
        assert!(partial_trace(&s, &[0, 1, 2]).is_err());
        assert!(partial_trace(&s, &[5]).is_err());
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut m = CMatrix::identity(2, 2) * c(0.5);
        m[(0, 1)] = c(0.3);
        assert!(matches!(DensityMatrix::new(m.clone()), Err(Error::NotHermitian(_))));
        let rho = DensityMatrix::new_unchecked(m);
        assert!(matches!(von_neumann_entropy(&rho), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn entropy_symmetric_and_bounded_for_pure_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for trial in 0..40 {
            let n = 2 + trial % 5;
            let s = StateVector::haar_random(n, &mut rng);
            let k = 1 + trial % (n - 1);
            let a: Vec<usize> = (0..k).collect();
            let b: Vec<usize> = (k..n).collect();
            let sa = von_neumann_entropy(&partial_trace(&s, &a).unwrap()).unwrap();
            let sb = von_neumann_entropy(&partial_trace(&s, &b).unwrap()).unwrap();
            assert!((sa - sb).abs() < 1e-9);
            assert!(sa >= 0.0 && sa <= k.min(n - k) as f64 + 1e-9);
            let rho = partial_trace(&s, &a).unwrap();
            assert!((rho.trace().re - 1.0).abs() < 1e-10);
        }
    }
}
