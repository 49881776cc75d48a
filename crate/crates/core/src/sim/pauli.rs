use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::matrix::{hadamard, rotation_gate, CMatrix};
use super::state::StateVector;
use crate::{seeding, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_char(ch: char) -> Option<Pauli> {
        match ch {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// Tensor product of single-qubit Paulis, character `i` acting on qubit `i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString(Vec<Pauli>);

impl PauliString {
    pub fn new(ops: Vec<Pauli>) -> Self {
        PauliString(ops)
    }

    pub fn identity(n: usize) -> Self {
        PauliString(vec![Pauli::I; n])
    }

    /// `op` on `qubit`, identity elsewhere.
    pub fn single(n: usize, qubit: usize, op: Pauli) -> Self {
        let mut ops = vec![Pauli::I; n];
        ops[qubit] = op;
        PauliString(ops)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn ops(&self) -> &[Pauli] {
        &self.0
    }

    pub fn is_diagonal(&self) -> bool {
        self.0.iter().all(|p| matches!(p, Pauli::I | Pauli::Z))
    }

    /// Bit-flip mask, phase mask and number of Y factors. `P|b⟩ =
    /// i^ny · (-1)^popcount(b & z) · |b ^ x⟩`.
    fn masks(&self) -> (usize, usize, u32) {
        let n = self.0.len();
        let (mut x, mut z, mut ny) = (0usize, 0usize, 0u32);
        for (q, p) in self.0.iter().enumerate() {
            let bit = 1usize << (n - 1 - q);
            match p {
                Pauli::I => {}
                Pauli::X => x |= bit,
                Pauli::Y => {
                    x |= bit;
                    z |= bit;
                    ny += 1;
                }
                Pauli::Z => z |= bit,
            }
        }
        (x, z, ny)
    }

    /// `⟨ψ|P|ψ⟩` (real for Hermitian `P`).
    pub fn expectation(&self, state: &StateVector) -> Result<f64> {
        if self.len() != state.n_qubits() {
            return Err(Error::Dimension(format!(
                "Pauli string of length {} on a {}-qubit state",
                self.len(),
                state.n_qubits()
            )));
        }
        let (x, z, ny) = self.masks();
        let amps = state.amplitudes();
        let mut acc = Complex64::new(0.0, 0.0);
        for (b, a) in amps.iter().enumerate() {
            let sign = if (b & z).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            acc += amps[b ^ x].conj() * a * sign;
        }
        let value = acc * i_pow(ny);
        Ok(value.re)
    }

    /// Applies `P` to every basis column of a dense matrix, summing `coeff·P` into `out`.
    fn accumulate_dense(&self, coeff: f64, out: &mut CMatrix) {
        let (x, z, ny) = self.masks();
        let phase = i_pow(ny) * coeff;
        for b in 0..out.ncols() {
            let sign = if (b & z).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            out[(b ^ x, b)] += phase * sign;
        }
    }
}

fn i_pow(k: u32) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.0 {
            write!(f, "{}", p.as_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.is_empty() {
            return Err(Error::invalid("empty Pauli string"));
        }
        s.chars()
            .map(|ch| {
                Pauli::from_char(ch)
                    .ok_or_else(|| Error::invalid(format!("invalid Pauli character {ch:?} in {s:?}")))
            })
            .collect::<Result<Vec<_>>>()
            .map(PauliString)
    }
}

/// Real-weighted sum of Pauli strings sharing one length.
///
/// Duplicate strings are merged on insertion, keeping first-seen order.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliSum {
    n_qubits: usize,
    terms: Vec<(f64, PauliString)>,
}

impl PauliSum {
    pub fn new(n_qubits: usize) -> Self {
        PauliSum {
            n_qubits,
            terms: Vec::new(),
        }
    }

    pub fn from_terms<I>(n_qubits: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, PauliString)>,
    {
        let mut sum = PauliSum::new(n_qubits);
        for (c, p) in terms {
            sum.add_term(c, p)?;
        }
        Ok(sum)
    }

    pub fn add_term(&mut self, coeff: f64, string: PauliString) -> Result<()> {
        if string.len() != self.n_qubits {
            return Err(Error::Dimension(format!(
                "term {string} has length {}, expected {}",
                string.len(),
                self.n_qubits
            )));
        }
        if !coeff.is_finite() {
            return Err(Error::invalid(format!("non-finite coefficient for {string}")));
        }
        match self.terms.iter_mut().find(|(_, p)| *p == string) {
            Some((c, _)) => *c += coeff,
            None => self.terms.push((coeff, string)),
        }
        Ok(())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn terms(&self) -> &[(f64, PauliString)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// `Σ|a_i|`, an upper bound on `|⟨H⟩|`.
    pub fn one_norm(&self) -> f64 {
        self.terms.iter().map(|(c, _)| c.abs()).sum()
    }

    pub fn is_diagonal(&self) -> bool {
        self.terms.iter().all(|(_, p)| p.is_diagonal())
    }

    /// Exact `Σ a_i ⟨ψ|P_i|ψ⟩`.
    pub fn expectation(&self, state: &StateVector) -> Result<f64> {
        if self.n_qubits != state.n_qubits() {
            return Err(Error::Dimension(format!(
                "{}-qubit observable on a {}-qubit state",
                self.n_qubits,
                state.n_qubits()
            )));
        }
        let mut total = 0.0;
        for (c, p) in &self.terms {
            total += c * p.expectation(state)?;
        }
        Ok(total)
    }

    /// Dense `2^n × 2^n` matrix.
    pub fn to_dense(&self) -> CMatrix {
        let d = 1usize << self.n_qubits;
        let mut m = CMatrix::zeros(d, d);
        for (c, p) in &self.terms {
            p.accumulate_dense(*c, &mut m);
        }
        m
    }

    /// Diagonal entry `⟨z|H|z⟩` for a basis index.
    pub fn diagonal_entry(&self, index: usize) -> f64 {
        self.terms
            .iter()
            .filter(|(_, p)| p.is_diagonal())
            .map(|(c, p)| {
                let (_, z, _) = p.masks();
                if (index & z).count_ones().is_multiple_of(2) {
                    *c
                } else {
                    -*c
                }
            })
            .sum()
    }

    /// Parses the text format: one `<coefficient> <pauli_string>` per line,
    /// `#` starting a comment.
    pub fn parse(text: &str, source_name: &str) -> Result<Self> {
        let mut sum: Option<PauliSum> = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse {
                source_name: source_name.to_string(),
                line: lineno + 1,
                message,
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 2 {
                return Err(err(format!(
                    "expected `<coefficient> <pauli_string>`, got {line:?}"
                )));
            }
            let coeff: f64 = fields[0]
                .parse()
                .map_err(|_| err(format!("bad coefficient {:?}", fields[0])))?;
            let string: PauliString = fields[1].parse().map_err(|e| err(format!("{e}")))?;
            let sum = sum.get_or_insert_with(|| PauliSum::new(string.len()));
            sum.add_term(coeff, string).map_err(|e| err(format!("{e}")))?;
        }
        sum.ok_or_else(|| Error::Parse {
            source_name: source_name.to_string(),
            line: 0,
            message: "no terms".into(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Text form accepted by [`PauliSum::parse`].
    pub fn to_text(&self) -> String {
        self.terms
            .iter()
            .map(|(c, p)| format!("{c} {p}\n"))
            .collect()
    }
}

/// Samples `shots` bitstrings after rotating into the eigenbasis of `basis`.
///
/// X positions get a Hadamard and Y positions `RX(π/2)`, so each measured
/// bit `b` on a non-identity position contributes `(-1)^b` to the term.
pub fn sample_counts(
    state: &StateVector,
    basis: &PauliString,
    shots: u64,
    seed: u64,
) -> Result<BTreeMap<String, u64>> {
    if shots == 0 {
        return Err(Error::invalid(
            "shots must be >= 1; use the exact expectation for shot-free evaluation",
        ));
    }
    if basis.len() != state.n_qubits() {
        return Err(Error::Dimension(format!(
            "basis of length {} for a {}-qubit state",
            basis.len(),
            state.n_qubits()
        )));
    }
    let mut rotated = state.clone();
    let h = hadamard();
    let rx = rotation_gate(Pauli::X, std::f64::consts::FRAC_PI_2);
    for (q, p) in basis.ops().iter().enumerate() {
        match p {
            Pauli::X => rotated.apply(&h, &[q])?,
            Pauli::Y => rotated.apply(&rx, &[q])?,
            _ => {}
        }
    }
    let mut cumulative = Vec::with_capacity(rotated.dim());
    let mut acc = 0.0;
    for p in rotated.probabilities() {
        acc += p;
        cumulative.push(acc);
    }
    let mut rng = seeding::stream_rng(seed, 0);
    let mut hits: HashMap<usize, u64> = HashMap::new();
    for _ in 0..shots {
        let u: f64 = rng.random::<f64>() * acc;
        let idx = cumulative
            .partition_point(|&c| c <= u)
            .min(cumulative.len() - 1);
        *hits.entry(idx).or_insert(0) += 1;
    }
    Ok(hits
        .into_iter()
        .map(|(idx, n)| (rotated.bitstring(idx), n))
        .collect())
}

/// Shot estimate of `⟨P⟩` from counts sampled in the eigenbasis of `P`.
pub fn parity_estimate(counts: &BTreeMap<String, u64>, basis: &PauliString) -> f64 {
    let total: u64 = counts.values().sum();
    if total == 0 {
        return 0.0;
    }
    let signed: i64 = counts
        .iter()
        .map(|(bits, &n)| {
            let odd = bits
                .chars()
                .zip(basis.ops())
                .filter(|(b, p)| *b == '1' && **p != Pauli::I)
                .count()
                % 2
                == 1;
            if odd {
                -(n as i64)
            } else {
                n as i64
            }
        })
        .sum();
    signed as f64 / total as f64
}

impl PauliSum {
    /// Shot-sampled `⟨H⟩`, each term measured independently with its own sub-seed.
    pub fn sampled_expectation(&self, state: &StateVector, shots: u64, seed: u64) -> Result<f64> {
        let mut total = 0.0;
        for (k, (c, p)) in self.terms.iter().enumerate() {
            if p.ops().iter().all(|&q| q == Pauli::I) {
                total += c;
                continue;
            }
            let counts = sample_counts(state, p, shots, seeding::mix(seed, k as u64))?;
            total += c * parity_estimate(&counts, p);
        }
        Ok(total)
    }
}
