//! SPSA-driven VQE, MaxCut encoding with a brute-force oracle, and
//! top-k / rank-of-correct-answer scoring.

use std::collections::BTreeSet;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::pqc::{Ansatz, PqcSpec};
use crate::seeding::{mix, stream_rng};
use crate::sim::{Pauli, PauliString, PauliSum, StateVector};
use crate::{Error, Result};

pub const MAX_BRUTE_FORCE_NODES: usize = 20;

const SALT_INIT: u64 = 1;
const SALT_PERTURB: u64 = 2;
const SALT_SHOTS: u64 = 3;
const SALT_CALIBRATE: u64 = 4;

/// How the SPSA step size `a` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpsaGain {
    Fixed(f64),
    /// Pick `a` so the first update moves each coordinate by about
    /// `target_step` radians, estimated from `samples` gradient draws at the
    /// initial point (2 evaluations each).
    Calibrated { target_step: f64, samples: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpsaConfig {
    pub max_iterations: usize,
    pub gain: SpsaGain,
    pub c: f64,
    pub alpha: f64,
    pub gamma: f64,
    /// Stability constant `A`; `None` means `0.1·max_iterations`.
    pub stability: Option<f64>,
    pub seed: u64,
}

impl Default for SpsaConfig {
    fn default() -> Self {
        SpsaConfig {
            max_iterations: 100,
            gain: SpsaGain::Calibrated {
                target_step: 0.1,
                samples: 25,
            },
            c: 0.1,
            alpha: 0.602,
            gamma: 0.101,
            stability: None,
            seed: 0,
        }
    }
}

impl SpsaConfig {
    pub fn with_seed(seed: u64) -> Self {
        SpsaConfig {
            seed,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::invalid("SPSA needs >= 1 iteration"));
        }
        if !(self.c > 0.0) || !self.alpha.is_finite() || !self.gamma.is_finite() {
            return Err(Error::invalid("SPSA needs c > 0 and finite exponents"));
        }
        match self.gain {
            SpsaGain::Fixed(a) if !(a > 0.0) => Err(Error::invalid("SPSA gain a must be > 0")),
            SpsaGain::Calibrated { target_step, samples } if !(target_step > 0.0) || samples == 0 => {
                Err(Error::invalid("gain calibration needs a positive step and >= 1 sample"))
            }
            _ => Ok(()),
        }
    }

    pub fn stability_constant(&self) -> f64 {
        self.stability.unwrap_or(0.1 * self.max_iterations as f64)
    }

    /// Evaluations outside the iterations: gain calibration plus one
    /// evaluation of the final iterate.
    pub fn overhead_evaluations(&self) -> usize {
        1 + match self.gain {
            SpsaGain::Fixed(_) => 0,
            SpsaGain::Calibrated { samples, .. } => 2 * samples,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub eval: usize,
    pub value: f64,
    pub params: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VqeTrace {
    pub records: Vec<EvalRecord>,
    pub best_value: f64,
    pub best_params: Vec<f64>,
    /// Iterate after the last update; it is the last record.
    pub final_params: Vec<f64>,
    /// The calibrated or fixed step size `a`.
    pub gain: f64,
}

impl VqeTrace {
    pub fn n_evaluations(&self) -> usize {
        self.records.len()
    }

    /// CSV with header `eval,value`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["eval", "value"])?;
        for r in &self.records {
            w.write_record([r.eval.to_string(), r.value.to_string()])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::invalid(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

fn random_signs<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect()
}

fn shifted(theta: &[f64], delta: &[f64], scale: f64) -> Vec<f64> {
    theta.iter().zip(delta).map(|(t, d)| t + scale * d).collect()
}

/// Minimise `objective` from `init` with simultaneous-perturbation
/// stochastic approximation. Each iteration costs exactly two evaluations;
/// the final iterate is evaluated once more at the end.
pub fn spsa_minimize<F>(mut objective: F, init: &[f64], cfg: &SpsaConfig) -> Result<VqeTrace>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    cfg.validate()?;
    if init.is_empty() {
        return Err(Error::invalid("SPSA needs at least one parameter"));
    }
    let big_a = cfg.stability_constant();
    let mut records: Vec<EvalRecord> = Vec::with_capacity(2 * cfg.max_iterations + cfg.overhead_evaluations());
    let mut eval = |params: Vec<f64>, records: &mut Vec<EvalRecord>| -> Result<f64> {
        let value = objective(&params)?;
        records.push(EvalRecord {
            eval: records.len(),
            value,
            params,
        });
        Ok(value)
    };

    let gain = match cfg.gain {
        SpsaGain::Fixed(a) => a,
        SpsaGain::Calibrated { target_step, samples } => {
            let mut rng = stream_rng(mix(cfg.seed, SALT_CALIBRATE), 0);
            let mut total = 0.0;
            for _ in 0..samples {
                let delta = random_signs(&mut rng, init.len());
                let plus = eval(shifted(init, &delta, cfg.c), &mut records)?;
                let minus = eval(shifted(init, &delta, -cfg.c), &mut records)?;
                total += (plus - minus).abs() / (2.0 * cfg.c);
            }
            let mean = total / samples as f64;
            let scale = (big_a + 1.0).powf(cfg.alpha);
            if mean > 0.0 {
                target_step * scale / mean
            } else {
                target_step * scale
            }
        }
    };

    let mut rng = stream_rng(mix(cfg.seed, SALT_PERTURB), 0);
    let mut theta = init.to_vec();
    for k in 0..cfg.max_iterations {
        let ak = gain / (k as f64 + 1.0 + big_a).powf(cfg.alpha);
        let ck = cfg.c / (k as f64 + 1.0).powf(cfg.gamma);
        let delta = random_signs(&mut rng, theta.len());
        let plus = eval(shifted(&theta, &delta, ck), &mut records)?;
        let minus = eval(shifted(&theta, &delta, -ck), &mut records)?;
        let g = (plus - minus) / (2.0 * ck);
        for (t, d) in theta.iter_mut().zip(&delta) {
            *t -= ak * g * d;
        }
    }
    eval(theta.clone(), &mut records)?;

    let best = records
        .iter()
        .min_by(|a, b| a.value.total_cmp(&b.value))
        .expect("at least two evaluations");
    Ok(VqeTrace {
        best_value: best.value,
        best_params: best.params.clone(),
        final_params: theta,
        gain,
        records,
    })
}

#[derive(Debug, Clone)]
pub struct VqeResult {
    pub trace: VqeTrace,
    pub initial_params: Vec<f64>,
    /// State prepared at `trace.best_params`.
    pub best_state: StateVector,
}

/// Seeded uniform draw in `[0, 2π)^count`.
pub fn initial_parameters(count: usize, seed: u64) -> Vec<f64> {
    let mut rng = stream_rng(mix(seed, SALT_INIT), 0);
    (0..count).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect()
}

/// Minimise `⟨h⟩` over the ansatz. `shots = 0` uses exact expectations;
/// otherwise every term is estimated from `shots` samples.
pub fn vqe_run(spec: &PqcSpec, h: &PauliSum, cfg: &SpsaConfig, shots: u64) -> Result<VqeResult> {
    if h.n_qubits() != spec.n_qubits {
        return Err(Error::Dimension(format!(
            "Hamiltonian acts on {} qubits, ansatz on {}",
            h.n_qubits(),
            spec.n_qubits
        )));
    }
    let ansatz = Ansatz::new(spec)?;
    let init = initial_parameters(ansatz.parameter_count(), cfg.seed);
    let shot_seed = mix(cfg.seed, SALT_SHOTS);
    let mut n_calls = 0u64;
    let trace = spsa_minimize(
        |params| {
            let psi = ansatz.prepare_state(params)?;
            n_calls += 1;
            if shots == 0 {
                h.expectation(&psi)
            } else {
                h.sampled_expectation(&psi, shots, mix(shot_seed, n_calls))
            }
        },
        &init,
        cfg,
    )?;
    let best_state = ansatz.prepare_state(&trace.best_params)?;
    Ok(VqeResult {
        trace,
        initial_params: init,
        best_state,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxCutProblem {
    n_nodes: usize,
    edges: Vec<(usize, usize, f64)>,
}

impl MaxCutProblem {
    pub fn new(n_nodes: usize, edges: Vec<(usize, usize, f64)>) -> Result<Self> {
        if n_nodes == 0 {
            return Err(Error::invalid("graph needs at least one node"));
        }
        let mut seen = BTreeSet::new();
        for &(u, v, w) in &edges {
            if u == v {
                return Err(Error::invalid(format!("self-loop on node {u}")));
            }
            if u >= n_nodes || v >= n_nodes {
                return Err(Error::invalid(format!("edge ({u}, {v}) outside nodes 0..{n_nodes}")));
            }
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::invalid(format!("edge ({u}, {v}) has non-positive weight {w}")));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(Error::invalid(format!("duplicate edge ({u}, {v})")));
            }
        }
        Ok(MaxCutProblem { n_nodes, edges })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    /// Parse `u v weight` lines; `#` starts a comment. The node count is one
    /// more than the largest index.
    pub fn parse(text: &str, source_name: &str) -> Result<Self> {
        let mut edges = Vec::new();
        let mut seen = BTreeSet::new();
        let err = |line: usize, message: String| Error::Parse {
            source_name: source_name.to_string(),
            line,
            message,
        };
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(err(i + 1, format!("expected `u v weight`, got {line:?}")));
            }
            let u: usize = fields[0].parse().map_err(|_| err(i + 1, format!("bad node {:?}", fields[0])))?;
            let v: usize = fields[1].parse().map_err(|_| err(i + 1, format!("bad node {:?}", fields[1])))?;
            let w: f64 = fields[2].parse().map_err(|_| err(i + 1, format!("bad weight {:?}", fields[2])))?;
            if u == v {
                return Err(err(i + 1, format!("self-loop on node {u}")));
            }
            if !(w > 0.0) || !w.is_finite() {
                return Err(err(i + 1, format!("weight must be positive, got {w}")));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(err(i + 1, format!("duplicate edge ({u}, {v})")));
            }
            edges.push((u, v, w));
        }
        let n = edges.iter().map(|&(u, v, _)| u.max(v) + 1).max();
        let n = n.ok_or_else(|| err(0, "graph has no edges".into()))?;
        MaxCutProblem::new(n, edges)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Cut weight of the partition encoded by basis index `z`; node `i` is
    /// qubit `i` (the most significant bit is node 0).
    pub fn cut_value(&self, z: usize) -> f64 {
        let bit = |i: usize| (z >> (self.n_nodes - 1 - i)) & 1;
        self.edges
            .iter()
            .filter(|&&(u, v, _)| bit(u) != bit(v))
            .map(|&(_, _, w)| w)
            .sum()
    }
}

/// `Σ (w/2)(Z_u Z_v − I)`, so every basis state has energy `−cut`.
pub fn maxcut_hamiltonian(p: &MaxCutProblem) -> Result<PauliSum> {
    let n = p.n_nodes();
    let mut h = PauliSum::new(n);
    let total: f64 = p.edges().iter().map(|e| e.2).sum();
    if total > 0.0 {
        h.add_term(-total / 2.0, PauliString::identity(n))?;
    }
    for &(u, v, w) in p.edges() {
        let mut ops = vec![Pauli::I; n];
        ops[u] = Pauli::Z;
        ops[v] = Pauli::Z;
        h.add_term(w / 2.0, PauliString::new(ops))?;
    }
    Ok(h)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxCutSolution {
    pub value: f64,
    pub optimal: BTreeSet<String>,
}

/// Exhaustive MaxCut; the optimal set holds every maximising bitstring.
pub fn brute_force_maxcut(p: &MaxCutProblem) -> Result<MaxCutSolution> {
    let n = p.n_nodes();
    if n > MAX_BRUTE_FORCE_NODES {
        return Err(Error::TooManyQubits {
            what: "brute-force MaxCut",
            n_qubits: n,
            limit: MAX_BRUTE_FORCE_NODES,
        });
    }
    let cuts: Vec<f64> = (0..1usize << n).map(|z| p.cut_value(z)).collect();
    let best = cuts.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let tol = 1e-9 * best.abs().max(1.0);
    let optimal = cuts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c >= best - tol)
        .map(|(z, _)| format!("{z:0n$b}"))
        .collect();
    Ok(MaxCutSolution { value: best, optimal })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionRanking {
    pub top_k: Vec<(String, f64)>,
    pub correct_count: usize,
    /// 1-based rank of the first optimal string in `top_k`, 0 if none.
    pub roca: usize,
}

/// The `k` most probable bitstrings, ties (within 1e-12) broken
/// lexicographically.
pub fn rank_solutions(state: &StateVector, k: usize) -> Result<Vec<(String, f64)>> {
    if k == 0 {
        return Err(Error::invalid("top-k needs k >= 1"));
    }
    let mut ranked: Vec<(i64, String, f64)> = state
        .probabilities()
        .into_iter()
        .enumerate()
        .map(|(z, p)| (-(p * 1e12).round() as i64, state.bitstring(z), p))
        .collect();
    ranked.sort_by(|a, b| (a.0, &a.1).cmp(&(b.0, &b.1)));
    Ok(ranked.into_iter().take(k).map(|(_, s, p)| (s, p)).collect())
}

pub fn roca(top_k: &[(String, f64)], optimal: &BTreeSet<String>) -> usize {
    top_k
        .iter()
        .position(|(s, _)| optimal.contains(s))
        .map_or(0, |i| i + 1)
}

pub fn score_solutions(state: &StateVector, k: usize, optimal: &BTreeSet<String>) -> Result<SolutionRanking> {
    let top_k = rank_solutions(state, k)?;
    Ok(SolutionRanking {
        correct_count: top_k.iter().filter(|(s, _)| optimal.contains(s)).count(),
        roca: roca(&top_k, optimal),
        top_k,
    })
}

pub fn load_graph(path: &Path) -> Result<MaxCutProblem> {
    MaxCutProblem::load(path)
}

pub fn load_hamiltonian(path: &Path) -> Result<PauliSum> {
    PauliSum::load(path)
}

/// JSON summary written next to the trace CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VqeSummary {
    pub best_value: f64,
    pub best_params: Vec<f64>,
    pub exact_reference: f64,
    pub n_evaluations: usize,
    pub gain: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub roca: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub correct_count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub top_k: Option<Vec<(String, f64)>>,
}

/// Bundled fixtures, embedded so tests and the CLI can reach them anywhere.
pub mod fixtures {
    pub const K3: &str = include_str!("../data/graphs/k3.txt");
    pub const RING5: &str = include_str!("../data/graphs/ring5.txt");
    pub const NEAR_CUBIC9: &str = include_str!("../data/graphs/near_cubic9.txt");
    pub const H2_STO3G_072: &str = include_str!("../data/hamiltonians/h2_sto3g_0.72.txt");
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cr::{CrCoefficients, EntanglerKind};
    use crate::pqc::{build_pqc, RotationSet};
    use crate::sim::exact_minimum_eigenvalue;
    use proptest::prelude::*;

    fn k3() -> MaxCutProblem {
        MaxCutProblem::parse(fixtures::K3, "k3").unwrap()
    }

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn spsa_on_quadratic() {
        for seed in 0..10 {
            let cfg = SpsaConfig::with_seed(seed);
            let f = |x: &[f64]| Ok(x.iter().map(|v| v * v).sum::<f64>());
            let trace = spsa_minimize(f, &[1.0, 1.0, 1.0], &cfg).unwrap();
            let last: f64 = trace.final_params.iter().map(|v| v * v).sum();
            assert!(last < 0.05, "seed {seed}: {last}");
        }
    }

    #[test]
    fn spsa_constant_objective_stays_put() {
        let init = [0.3, -1.2];
        let trace = spsa_minimize(|_| Ok(4.0), &init, &SpsaConfig::with_seed(3)).unwrap();
        assert_eq!(trace.final_params, init);
        assert_eq!(trace.best_value, 4.0);
    }

    #[test]
    fn spsa_budget_and_determinism() {
        let fixed = SpsaConfig {
            gain: SpsaGain::Fixed(0.2),
            max_iterations: 37,
            ..SpsaConfig::with_seed(5)
        };
        let mut calls = 0;
        let trace = spsa_minimize(
            |x| {
                calls += 1;
                Ok(x[0].sin() + x[1].cos())
            },
            &[0.1, 0.2],
            &fixed,
        )
        .unwrap();
        assert_eq!(calls, 75);
        assert_eq!(trace.n_evaluations(), 74 + fixed.overhead_evaluations());
        assert_eq!(trace.records.last().unwrap().params, trace.final_params);
        let again = spsa_minimize(|x| Ok(x[0].sin() + x[1].cos()), &[0.1, 0.2], &fixed).unwrap();
        assert_eq!(trace, again);

        let calibrated = SpsaConfig::with_seed(5);
        let trace = spsa_minimize(|x| Ok(x[0] * x[0]), &[1.0], &calibrated).unwrap();
        assert_eq!(trace.n_evaluations(), 200 + calibrated.overhead_evaluations());
        let min = trace.records.iter().map(|r| r.value).fold(f64::INFINITY, f64::min);
        assert_eq!(trace.best_value, min);
    }

    #[test]
    fn spsa_rejects_bad_config() {
        let bad = SpsaConfig {
            max_iterations: 0,
            ..Default::default()
        };
        assert!(spsa_minimize(|_| Ok(0.0), &[0.0], &bad).is_err());
        let bad = SpsaConfig {
            c: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn single_edge_energies() {
        let p = MaxCutProblem::new(2, vec![(0, 1, 1.0)]).unwrap();
        let h = maxcut_hamiltonian(&p).unwrap();
        assert!((h.diagonal_entry(0b01) + 1.0).abs() < 1e-12);
        assert!(h.diagonal_entry(0b00).abs() < 1e-12);
    }

    #[test]
    fn k3_brute_force() {
        let p = k3();
        let sol = brute_force_maxcut(&p).unwrap();
        assert_eq!(sol.value, 2.0);
        assert_eq!(sol.optimal, set(&["001", "010", "011", "100", "101", "110"]));
        let h = maxcut_hamiltonian(&p).unwrap();
        assert!((exact_minimum_eigenvalue(&h).unwrap().0 + 2.0).abs() < 1e-12);

        let path = MaxCutProblem::new(2, vec![(0, 1, 1.0)]).unwrap();
        assert_eq!(brute_force_maxcut(&path).unwrap().optimal, set(&["01", "10"]));
        let empty = MaxCutProblem::new(2, vec![]).unwrap();
        let sol = brute_force_maxcut(&empty).unwrap();
        assert_eq!((sol.value, sol.optimal.len()), (0.0, 4));
        let big = MaxCutProblem::new(21, vec![(0, 1, 1.0)]).unwrap();
        assert!(brute_force_maxcut(&big).is_err());
    }

    #[test]
    fn fixture_graphs_parse() {
        assert_eq!(MaxCutProblem::parse(fixtures::RING5, "r").unwrap().edges().len(), 5);
        let g9 = MaxCutProblem::parse(fixtures::NEAR_CUBIC9, "g9").unwrap();
        assert_eq!((g9.n_nodes(), g9.edges().len()), (9, 14));
        assert_eq!(brute_force_maxcut(&MaxCutProblem::parse(fixtures::RING5, "r").unwrap()).unwrap().value, 4.0);
    }

    #[test]
    fn graph_parse_errors_name_the_line() {
        let e = MaxCutProblem::parse("0 1 1.0\n1 0 2.0\n", "g.txt").unwrap_err();
        assert!(e.to_string().contains("g.txt:2") && e.to_string().contains("duplicate"), "{e}");
        assert!(MaxCutProblem::parse("0 1\n", "g").is_err());
        assert!(MaxCutProblem::parse("0 0 1\n", "g").is_err());
        assert!(MaxCutProblem::parse("0 1 -1\n", "g").is_err());
        assert!(MaxCutProblem::parse("# nothing\n", "g").is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(20))]
        #[test]
        fn diagonal_is_minus_cut(n in 2usize..=10, mask in any::<u64>(), wseed in any::<u64>()) {
            let mut edges = Vec::new();
            let mut bit = 0;
            for u in 0..n {
                for v in u + 1..n {
                    if mask >> (bit % 64) & 1 == 1 {
                        let w = 0.5 + (mix(wseed, bit as u64) % 1000) as f64 / 500.0;
                        edges.push((u, v, w));
                    }
                    bit += 1;
                }
            }
            let p = MaxCutProblem::new(n, edges).unwrap();
            let h = maxcut_hamiltonian(&p).unwrap();
            for z in 0..1usize << n {
                prop_assert!((h.diagonal_entry(z) + p.cut_value(z)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn ranking_rules() {
        let exact = StateVector::from_bitstring("101").unwrap();
        let optimal = brute_force_maxcut(&k3()).unwrap().optimal;
        let r = score_solutions(&exact, 5, &optimal).unwrap();
        assert_eq!(r.roca, 1);
        assert_eq!(r.top_k[0].0, "101");

        // uniform: ties resolve lexicographically, 000 first (not optimal)
        let amps = vec![crate::Complex64::new(1.0, 0.0); 8];
        let uniform = StateVector::normalized(amps).unwrap();
        let r = score_solutions(&uniform, 5, &optimal).unwrap();
        let names: Vec<&str> = r.top_k.iter().map(|(s, _)| s.as_str()).collect();
        assert_eq!(names, ["000", "001", "010", "011", "100"]);
        assert_eq!((r.correct_count, r.roca), (4, 2));

        let zero = StateVector::zero(3);
        let r = score_solutions(&zero, 1, &optimal).unwrap();
        assert_eq!(r.roca, 0);
        assert!(rank_solutions(&zero, 0).is_err());
    }

    #[test]
    fn ranking_agrees_with_recount() {
        let spec = build_pqc(3, 2, RotationSet::Ry, EntanglerKind::Cnot).unwrap();
        let optimal = brute_force_maxcut(&k3()).unwrap().optimal;
        for seed in 0..10 {
            let psi = crate::pqc::prepare_state(&spec, &initial_parameters(spec.parameter_count(), seed)).unwrap();
            let r = score_solutions(&psi, 5, &optimal).unwrap();
            let probs = psi.probabilities();
            for w in r.top_k.windows(2) {
                assert!(w[0].1 >= w[1].1 - 1e-12);
            }
            let kth = r.top_k.last().unwrap().1;
            let above = probs.iter().filter(|&&p| p > kth + 1e-12).count();
            assert!(above < 5);
            assert_eq!(r.correct_count, r.top_k.iter().filter(|(s, _)| optimal.contains(s)).count());
        }
    }

    #[test]
    fn vqe_on_z_sum() {
        let mut h = PauliSum::new(2);
        h.add_term(1.0, PauliString::single(2, 0, Pauli::Z)).unwrap();
        h.add_term(1.0, PauliString::single(2, 1, Pauli::Z)).unwrap();
        for kind in [
            EntanglerKind::Cnot,
            EntanglerKind::cr_angle(CrCoefficients::device_average()),
            EntanglerKind::cr_duration(CrCoefficients::device_average()),
        ] {
            let spec = build_pqc(2, 1, RotationSet::Ry, kind).unwrap();
            let mut best: Vec<f64> = (0..10)
                .map(|seed| {
                    let result = vqe_run(&spec, &h, &SpsaConfig::with_seed(seed), 0).unwrap();
                    for r in &result.trace.records {
                        assert!(r.value >= -2.0 - 1e-9);
                    }
                    result.trace.best_value
                })
                .collect();
            best.sort_by(f64::total_cmp);
            let median = (best[4] + best[5]) / 2.0;
            assert!((median + 2.0).abs() < 0.05, "{}: {best:?}", kind.label());
        }
    }

    #[test]
    fn vqe_rejects_size_mismatch_and_supports_shots() {
        let spec = build_pqc(2, 1, RotationSet::Ry, EntanglerKind::Cnot).unwrap();
        let h = PauliSum::parse("1.0 ZZZ\n", "h").unwrap();
        assert!(vqe_run(&spec, &h, &SpsaConfig::default(), 0).is_err());
        let h = PauliSum::parse(fixtures::H2_STO3G_072, "h2").unwrap();
        let cfg = SpsaConfig {
            max_iterations: 10,
            ..SpsaConfig::with_seed(1)
        };
        let a = vqe_run(&spec, &h, &cfg, 256).unwrap();
        let b = vqe_run(&spec, &h, &cfg, 256).unwrap();
        assert_eq!(a.trace, b.trace);
    }

    #[test]
    fn h2_fixture_matches_declared_energy() {
        let h = PauliSum::parse(fixtures::H2_STO3G_072, "h2").unwrap();
        assert_eq!(h.n_qubits(), 2);
        assert!((exact_minimum_eigenvalue(&h).unwrap().0 + 1.137111715115).abs() < 1e-9);
    }

    #[test]
    fn trace_csv_header() {
        let trace = spsa_minimize(|x| Ok(x[0]), &[0.0], &SpsaConfig {
            max_iterations: 1,
            gain: SpsaGain::Fixed(0.1),
            ..Default::default()
        })
        .unwrap();
        let csv = trace.to_csv().unwrap();
        assert!(csv.starts_with("eval,value\n0,"));
        assert_eq!(csv.lines().count(), 4);
    }
}
