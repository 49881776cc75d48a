//! Ansatz quality metrics: expressibility, entanglement entropy and
//! gradient variance.
//!
//! Every sampling loop draws sample `k` from its own RNG stream derived
//! from `(seed, k)` and reduces in index order, so results do not depend
//! on the rayon pool size.

use std::f64::consts::PI;
use std::ops::RangeInclusive;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cr::EntanglerKind;
use crate::pqc::{build_pqc, Ansatz, PqcSpec, RotationSet};
use crate::seeding::stream_rng;
use crate::sim::{partial_trace, von_neumann_entropy, StateVector};
use crate::{Error, Result};

pub const DEFAULT_EXPR_SAMPLES: usize = 5000;
pub const DEFAULT_EXPR_BINS: usize = 75;
pub const MIN_EXPR_SAMPLES: usize = 1000;
pub const MIN_EXPR_BINS: usize = 10;

/// Haar mass of fidelities in `[lo, hi]` for dimension `dim`:
/// `(1−lo)^(d−1) − (1−hi)^(d−1)`.
pub fn haar_bin_probability(dim: usize, lo: f64, hi: f64) -> Result<f64> {
    if dim < 2 {
        return Err(Error::invalid(format!("Haar fidelity needs dim >= 2, got {dim}")));
    }
    if !(0.0 <= lo && lo < hi && hi <= 1.0) {
        return Err(Error::invalid(format!("invalid fidelity bin [{lo}, {hi}]")));
    }
    let e = (dim - 1) as i32;
    Ok((1.0 - lo).powi(e) - (1.0 - hi).powi(e))
}

/// Haar masses of `n_bins` equal-width bins on `[0, 1]`.
pub fn haar_bin_masses(dim: usize, n_bins: usize) -> Result<Vec<f64>> {
    (0..n_bins)
        .map(|i| haar_bin_probability(dim, i as f64 / n_bins as f64, (i + 1) as f64 / n_bins as f64))
        .collect()
}

/// Normalised histogram of fidelities over `n_bins` equal bins; `F = 1`
/// lands in the last bin.
pub fn fidelity_histogram(fidelities: &[f64], n_bins: usize) -> Vec<f64> {
    let mut counts = vec![0usize; n_bins];
    for &f in fidelities {
        let bin = ((f.clamp(0.0, 1.0) * n_bins as f64) as usize).min(n_bins - 1);
        counts[bin] += 1;
    }
    let total = fidelities.len() as f64;
    counts.into_iter().map(|c| c as f64 / total).collect()
}

/// `D_KL(P‖Q)` in nats with `0·ln 0 = 0`.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(&pi, _)| pi > 0.0)
        .map(|(&pi, &qi)| pi * (pi / qi).ln())
        .sum()
}

/// KL divergence of a fidelity sample against the Haar distribution.
pub fn expressibility_from_fidelities(fidelities: &[f64], dim: usize, n_bins: usize) -> Result<f64> {
    let q = haar_bin_masses(dim, n_bins)?;
    let p = fidelity_histogram(fidelities, n_bins);
    Ok(kl_divergence(&p, &q).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpressibilityResult {
    /// KL divergence against Haar, nats.
    pub expr: f64,
    pub n_samples: usize,
    pub n_bins: usize,
    pub seed: u64,
}

fn uniform_params<R: Rng>(rng: &mut R, count: usize) -> Vec<f64> {
    (0..count).map(|_| rng.random_range(0.0..2.0 * PI)).collect()
}

/// Fidelities `|⟨ψ(θ₁)|ψ(θ₂)⟩|²` for `n_samples` uniform parameter pairs.
pub fn sample_fidelities(ansatz: &Ansatz, n_samples: usize, seed: u64) -> Result<Vec<f64>> {
    let p = ansatz.parameter_count();
    (0..n_samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(seed, k as u64);
            let a = ansatz.prepare_state(&uniform_params(&mut rng, p))?;
            let b = ansatz.prepare_state(&uniform_params(&mut rng, p))?;
            Ok(a.fidelity(&b).clamp(0.0, 1.0))
        })
        .collect()
}

/// Fidelities between independent Haar-random states.
pub fn haar_fidelities(n_qubits: usize, n_samples: usize, seed: u64) -> Vec<f64> {
    (0..n_samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(seed, k as u64);
            let a = StateVector::haar_random(n_qubits, &mut rng);
            let b = StateVector::haar_random(n_qubits, &mut rng);
            a.fidelity(&b)
        })
        .collect()
}

/// Expressibility of an ansatz: KL divergence, in nats, of its pair-fidelity
/// histogram from the Haar one. Smaller means closer to Haar.
pub fn expressibility(spec: &PqcSpec, n_samples: usize, n_bins: usize, seed: u64) -> Result<ExpressibilityResult> {
    if n_samples < MIN_EXPR_SAMPLES || n_bins < MIN_EXPR_BINS {
        return Err(Error::invalid(format!(
            "expressibility needs >= {MIN_EXPR_SAMPLES} samples and >= {MIN_EXPR_BINS} bins"
        )));
    }
    let ansatz = Ansatz::new(spec)?;
    let fidelities = sample_fidelities(&ansatz, n_samples, seed)?;
    let expr = expressibility_from_fidelities(&fidelities, 1usize << spec.n_qubits, n_bins)?;
    Ok(ExpressibilityResult {
        expr,
        n_samples,
        n_bins,
        seed,
    })
}

/// Contiguous split `{0..kept}` versus the rest.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bipartition {
    pub n_qubits: usize,
    pub kept: usize,
}

impl Bipartition {
    /// `(n−1)/2` leading qubits against the remainder, e.g. 4–5 for nine qubits.
    pub fn default_for(n_qubits: usize) -> Result<Self> {
        Self::new(n_qubits, (n_qubits.saturating_sub(1)) / 2)
    }

    pub fn new(n_qubits: usize, kept: usize) -> Result<Self> {
        if n_qubits < 3 {
            return Err(Error::invalid("entropy scans need >= 3 qubits"));
        }
        if kept == 0 || kept >= n_qubits {
            return Err(Error::invalid(format!("cannot keep {kept} of {n_qubits} qubits")));
        }
        Ok(Bipartition { n_qubits, kept })
    }

    pub fn kept_qubits(&self) -> Vec<usize> {
        (0..self.kept).collect()
    }

    /// Upper bound on the entropy, bits.
    pub fn max_entropy(&self) -> f64 {
        self.kept.min(self.n_qubits - self.kept) as f64
    }
}

/// Mean entanglement entropy of the ansatz at one depth.
pub fn mean_entropy(spec: &PqcSpec, split: Bipartition, n_samples: usize, seed: u64) -> Result<f64> {
    if split.n_qubits != spec.n_qubits {
        return Err(Error::Dimension("bipartition does not match the ansatz width".into()));
    }
    if n_samples == 0 {
        return Err(Error::invalid("entropy scan needs >= 1 sample"));
    }
    let ansatz = Ansatz::new(spec)?;
    let keep = split.kept_qubits();
    let values: Vec<f64> = (0..n_samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(seed, k as u64);
            let psi = ansatz.prepare_state(&uniform_params(&mut rng, ansatz.parameter_count()))?;
            von_neumann_entropy(&partial_trace(&psi, &keep)?)
        })
        .collect::<Result<_>>()?;
    Ok(values.iter().sum::<f64>() / n_samples as f64)
}

/// `(L, mean S in bits)` for each depth in `layers`, using `template` for
/// everything but the layer count.
pub fn entropy_scan(
    template: &PqcSpec,
    layers: RangeInclusive<usize>,
    n_samples: usize,
    split: Bipartition,
    seed: u64,
) -> Result<Vec<(usize, f64)>> {
    layers
        .map(|l| Ok((l, mean_entropy(&template.with_layers(l), split, n_samples, seed)?)))
        .collect()
}

/// Cost function of the barren-plateau analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CostKind {
    /// `1 − p(0…0)` over all qubits.
    Global,
    /// `1 − p(0…0)` over the first `N_C` qubits.
    Local(usize),
}

impl CostKind {
    pub fn label(&self) -> String {
        match self {
            CostKind::Global => "global".into(),
            CostKind::Local(nc) => format!("local:{nc}"),
        }
    }

    pub fn evaluate(&self, state: &StateVector) -> Result<f64> {
        match *self {
            CostKind::Global => Ok(cost_global(state)),
            CostKind::Local(nc) => cost_local(state, nc),
        }
    }
}

impl std::str::FromStr for CostKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "global" {
            return Ok(CostKind::Global);
        }
        s.strip_prefix("local:")
            .and_then(|n| n.parse().ok())
            .filter(|&n: &usize| n >= 1)
            .map(CostKind::Local)
            .ok_or_else(|| Error::invalid(format!("cost must be `global` or `local:<N_C>`, got {s:?}")))
    }
}

pub fn cost_global(state: &StateVector) -> f64 {
    1.0 - state.amplitudes()[0].norm_sqr()
}

pub fn cost_local(state: &StateVector, n_cost_qubits: usize) -> Result<f64> {
    let n = state.n_qubits();
    if n_cost_qubits == 0 || n_cost_qubits > n {
        return Err(Error::invalid(format!(
            "N_C = {n_cost_qubits} outside [1, {n}]"
        )));
    }
    // indices whose leading N_C bits are zero are exactly 0..2^(n−N_C)
    let p0: f64 = state.amplitudes()[..1usize << (n - n_cost_qubits)]
        .iter()
        .map(|a| a.norm_sqr())
        .sum();
    Ok(1.0 - p0)
}

/// `∂C/∂θ_index` by the parameter-shift rule,
/// `[C(θ + π/2·e_i) − C(θ − π/2·e_i)] / 2`.
pub fn partial_derivative(ansatz: &Ansatz, params: &[f64], index: usize, cost: CostKind) -> Result<f64> {
    if index >= ansatz.parameter_count() {
        return Err(Error::invalid(format!(
            "parameter index {index} >= {}",
            ansatz.parameter_count()
        )));
    }
    let mut shifted = params.to_vec();
    shifted[index] = params[index] + PI / 2.0;
    let plus = cost.evaluate(&ansatz.prepare_state(&shifted)?)?;
    shifted[index] = params[index] - PI / 2.0;
    let minus = cost.evaluate(&ansatz.prepare_state(&shifted)?)?;
    Ok((plus - minus) / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DepthRule {
    /// `L = ⌈log₂ n⌉`.
    Shallow,
    /// `L = 10·n`.
    Deep,
}

impl DepthRule {
    pub fn layers(&self, n_qubits: usize) -> usize {
        match self {
            DepthRule::Shallow => (n_qubits as f64).log2().ceil().max(1.0) as usize,
            DepthRule::Deep => 10 * n_qubits,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            DepthRule::Shallow => "shallow",
            DepthRule::Deep => "deep",
        }
    }
}

impl std::str::FromStr for DepthRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "shallow" => Ok(DepthRule::Shallow),
            "deep" => Ok(DepthRule::Deep),
            other => Err(Error::invalid(format!("depth must be `shallow` or `deep`, got {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceRow {
    pub kind: String,
    pub n_qubits: usize,
    pub n_layers: usize,
    pub cost: String,
    pub variance: f64,
    /// Standard error of the variance estimate.
    pub std_error: f64,
    pub n_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceScanResult {
    pub rows: Vec<VarianceRow>,
}

/// Unbiased sample variance and its standard error.
pub fn variance_with_error(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>();
    let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    let var = if xs.len() > 1 { m2 / (n - 1.0) } else { 0.0 };
    let pop = m2 / n;
    let se = ((m4 - pop * pop).max(0.0) / n).sqrt();
    (var, se)
}

/// Variance of `∂C/∂θ_0` (first rotation on qubit 0) over uniform parameter draws.
pub fn gradient_variance(spec: &PqcSpec, cost: CostKind, n_samples: usize, seed: u64) -> Result<(f64, f64)> {
    if n_samples < 2 {
        return Err(Error::invalid("variance needs >= 2 samples"));
    }
    if let CostKind::Local(nc) = cost {
        if nc > spec.n_qubits {
            return Err(Error::invalid(format!("N_C = {nc} exceeds {} qubits", spec.n_qubits)));
        }
    }
    let ansatz = Ansatz::new(spec)?;
    let grads: Vec<f64> = (0..n_samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(seed, k as u64);
            let params = uniform_params(&mut rng, ansatz.parameter_count());
            partial_derivative(&ansatz, &params, 0, cost)
        })
        .collect::<Result<_>>()?;
    Ok(variance_with_error(&grads))
}

/// Gradient variance for every `(kind, n)` with depth from `depth`.
pub fn variance_scan(
    kinds: &[EntanglerKind],
    n_range: RangeInclusive<usize>,
    depth: DepthRule,
    rotations: RotationSet,
    cost: CostKind,
    n_samples: usize,
    seed: u64,
) -> Result<VarianceScanResult> {
    if *n_range.start() < 2 || *n_range.end() > 10 {
        return Err(Error::invalid("variance scans cover 2..=10 qubits"));
    }
    let mut rows = Vec::new();
    for kind in kinds {
        for n in n_range.clone() {
            let layers = depth.layers(n);
            let spec = build_pqc(n, layers, rotations, *kind)?;
            let (variance, std_error) = gradient_variance(&spec, cost, n_samples, seed)?;
            rows.push(VarianceRow {
                kind: kind.label().to_string(),
                n_qubits: n,
                n_layers: layers,
                cost: cost.label(),
                variance,
                std_error,
                n_samples,
            });
        }
    }
    Ok(VarianceScanResult { rows })
}

/// Least-squares line `y = a + b·x`; returns `(slope, intercept, r²)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, intercept, r2)
}

/// One plot-data row: `kind,n,L,metric,value,samples,seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub kind: String,
    pub n: usize,
    #[serde(rename = "L")]
    pub layers: usize,
    pub metric: String,
    pub value: f64,
    pub samples: usize,
    pub seed: u64,
}

/// CSV text with a header row.
pub fn metric_rows_to_csv(rows: &[MetricRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    if rows.is_empty() {
        w.write_record(["kind", "n", "L", "metric", "value", "samples", "seed"])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::invalid(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cr::CrCoefficients;
    use crate::sim::{apply_unitary, hadamard, rotation_gate, Pauli};

    #[test]
    fn haar_bins() {
        assert!((haar_bin_probability(2, 0.2, 0.7).unwrap() - 0.5).abs() < 1e-15);
        assert!((haar_bin_probability(16, 0.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((haar_bin_probability(4, 0.0, 0.5).unwrap() - 0.875).abs() < 1e-15);
        assert!(haar_bin_probability(1, 0.0, 1.0).is_err());
        assert!(haar_bin_probability(4, 0.5, 0.5).is_err());
        assert!(haar_bin_probability(4, -0.1, 0.5).is_err());
        let total: f64 = haar_bin_masses(32, 75).unwrap().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn haar_bin_mass_matches_sampling() {
        let f = haar_fidelities(2, 100_000, 3);
        let frac = f.iter().filter(|&&x| x <= 0.5).count() as f64 / f.len() as f64;
        assert!((frac - 0.875).abs() < 0.005, "{frac}");
    }

    #[test]
    fn constant_states_are_maximally_inexpressive() {
        // single-qubit "identity circuit": every fidelity is 1
        let fids = vec![1.0; 5000];
        let expr = expressibility_from_fidelities(&fids, 2, 75).unwrap();
        assert!((expr - 75f64.ln()).abs() < 1e-9);
        assert!(expr > 3.0);
    }

    #[test]
    fn undersampling_is_refused() {
        let spec = build_pqc(2, 1, RotationSet::Ry, EntanglerKind::Cnot).unwrap();
        assert!(expressibility(&spec, 999, 75, 0).is_err());
        assert!(expressibility(&spec, 1000, 9, 0).is_err());
    }

    #[test]
    fn costs_on_simple_states() {
        let zero = StateVector::zero(3);
        assert_eq!(cost_global(&zero), 0.0);
        assert_eq!(cost_local(&zero, 2).unwrap(), 0.0);
        let ones = StateVector::from_bitstring("111").unwrap();
        assert_eq!(cost_global(&ones), 1.0);
        let mut plus = StateVector::zero(3);
        for q in 0..3 {
            plus = apply_unitary(&plus, &hadamard(), &[q]).unwrap();
        }
        assert!((cost_global(&plus) - (1.0 - 0.125)).abs() < 1e-12);
        assert!((cost_local(&plus, 1).unwrap() - 0.5).abs() < 1e-12);
        assert!(cost_local(&plus, 0).is_err());
        assert!(cost_local(&plus, 4).is_err());
        assert!("local:0".parse::<CostKind>().is_err());
        assert_eq!("local:2".parse::<CostKind>().unwrap(), CostKind::Local(2));
    }

    #[test]
    fn single_qubit_gradient_against_finite_difference() {
        // C_G(θ) = 1 − cos²(θ/2) for RY(θ)|0⟩
        let cost = |t: f64| {
            let mut s = StateVector::zero(1);
            s.apply(&rotation_gate(Pauli::Y, t), &[0]).unwrap();
            cost_global(&s)
        };
        let theta: f64 = 0.7;
        let shift = (cost(theta + PI / 2.0) - cost(theta - PI / 2.0)) / 2.0;
        let h = 1e-5;
        let fd = (cost(theta + h) - cost(theta - h)) / (2.0 * h);
        assert!((shift - fd).abs() < 1e-7);
        assert!((shift - theta.sin() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn gradient_vanishes_for_disconnected_parameter() {
        // last-layer rotation on qubit 2 cannot affect the N_C = 1 cost on qubit 0
        let spec = build_pqc(3, 2, RotationSet::Ry, EntanglerKind::Cnot).unwrap();
        let a = Ansatz::new(&spec).unwrap();
        let idx = *a.parameters_on_qubit(2).last().unwrap();
        let params: Vec<f64> = (0..spec.parameter_count()).map(|i| 0.3 + i as f64).collect();
        assert_eq!(partial_derivative(&a, &params, idx, CostKind::Local(1)).unwrap(), 0.0);
        assert!(partial_derivative(&a, &params, 99, CostKind::Global).is_err());
    }

    #[test]
    fn entropy_scan_of_identity_entangler_is_zero() {
        let kind = EntanglerKind::CrDuration {
            duration_ns: 100.0,
            coefficients: CrCoefficients::zero(),
        };
        let spec = build_pqc(5, 1, RotationSet::Ry, kind).unwrap();
        let rows = entropy_scan(&spec, 1..=3, 10, Bipartition::default_for(5).unwrap(), 1).unwrap();
        assert_eq!(rows.len(), 3);
        for (_, s) in rows {
            assert!(s.abs() < 1e-9);
        }
        assert!(Bipartition::default_for(2).is_err());
        assert_eq!(Bipartition::default_for(9).unwrap().kept, 4);
    }

    #[test]
    fn depth_rules() {
        assert_eq!(DepthRule::Shallow.layers(2), 1);
        assert_eq!(DepthRule::Shallow.layers(5), 3);
        assert_eq!(DepthRule::Shallow.layers(8), 3);
        assert_eq!(DepthRule::Deep.layers(4), 40);
    }

    #[test]
    fn variance_scan_rows_and_bounds() {
        let scan = variance_scan(
            &[EntanglerKind::Cnot],
            2..=3,
            DepthRule::Shallow,
            RotationSet::Ry,
            CostKind::Local(1),
            50,
            9,
        )
        .unwrap();
        assert_eq!(scan.rows.len(), 2);
        assert!(scan.rows.iter().all(|r| r.variance >= 0.0));
        assert!(variance_scan(&[EntanglerKind::Cnot], 1..=3, DepthRule::Deep, RotationSet::Ry, CostKind::Global, 10, 0).is_err());
    }

    #[test]
    fn csv_header_and_rows() {
        let rows = vec![MetricRow {
            kind: "cnot".into(),
            n: 4,
            layers: 2,
            metric: "expr_kl_nats".into(),
            value: 0.25,
            samples: 5000,
            seed: 1,
        }];
        let text = metric_rows_to_csv(&rows).unwrap();
        assert_eq!(text, "kind,n,L,metric,value,samples,seed\ncnot,4,2,expr_kl_nats,0.25,5000,1\n");
    }
}
