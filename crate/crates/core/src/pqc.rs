//! Layered hardware-efficient ansatze with CNOT or CR entanglers.
//!
//! A layer is one rotation per qubit per axis followed by the entangler
//! chain along the map; a final rotation layer closes the circuit.
//! Parameters are ordered layer by layer, qubit by qubit, axes in the
//! order `RY` then `RZ`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cr::{entangler_unitary, Calibration, CrCoefficients, EntanglerKind, DEFAULT_CR_ANGLE, DEFAULT_CR_DURATION_NS};
use crate::sim::{rotation_gate, Pauli, StateVector, Unitary};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RotationSet {
    Ry,
    RyRz,
}

impl RotationSet {
    pub fn axes(&self) -> &'static [Pauli] {
        match self {
            RotationSet::Ry => &[Pauli::Y],
            RotationSet::RyRz => &[Pauli::Y, Pauli::Z],
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            RotationSet::Ry => "ry",
            RotationSet::RyRz => "ryrz",
        }
    }
}

impl std::str::FromStr for RotationSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ry" => Ok(RotationSet::Ry),
            "ryrz" => Ok(RotationSet::RyRz),
            other => Err(Error::invalid(format!("rotations must be `ry` or `ryrz`, got {other:?}"))),
        }
    }
}

/// Description of an ansatz.
#[derive(Debug, Clone, PartialEq)]
pub struct PqcSpec {
    pub n_qubits: usize,
    pub n_layers: usize,
    pub rotations: RotationSet,
    pub entangler: EntanglerKind,
    /// `(control, target)` pairs applied in order after each rotation layer.
    pub entanglement_map: Vec<(usize, usize)>,
    /// Per-pair coefficient overrides for the CR kinds.
    pub pair_coefficients: BTreeMap<(usize, usize), CrCoefficients>,
}

/// `(i, i+1)` for `i = 0..n−2`.
pub fn linear_map(n_qubits: usize) -> Vec<(usize, usize)> {
    (1..n_qubits).map(|i| (i - 1, i)).collect()
}

/// Linear-entanglement ansatz with `n_layers` layers plus a trailing rotation layer.
pub fn build_pqc(
    n_qubits: usize,
    n_layers: usize,
    rotations: RotationSet,
    entangler: EntanglerKind,
) -> Result<PqcSpec> {
    let spec = PqcSpec {
        n_qubits,
        n_layers,
        rotations,
        entangler,
        entanglement_map: linear_map(n_qubits),
        pair_coefficients: BTreeMap::new(),
    };
    spec.validate()?;
    Ok(spec)
}

impl PqcSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_qubits < 2 {
            return Err(Error::invalid(format!("ansatz needs >= 2 qubits, got {}", self.n_qubits)));
        }
        if self.n_layers < 1 {
            return Err(Error::invalid("ansatz needs >= 1 layer"));
        }
        for &(c, t) in &self.entanglement_map {
            if c == t || c >= self.n_qubits || t >= self.n_qubits {
                return Err(Error::invalid(format!(
                    "entangler pair ({c}, {t}) invalid for {} qubits",
                    self.n_qubits
                )));
            }
        }
        self.entangler.validate()?;
        for c in self.pair_coefficients.values() {
            c.validate()?;
        }
        Ok(())
    }

    pub fn parameter_count(&self) -> usize {
        self.rotation_slots() * self.n_qubits * (self.n_layers + 1)
    }

    /// Rotation gates per qubit per layer.
    pub fn rotation_slots(&self) -> usize {
        self.rotations.axes().len()
    }

    /// `(single-qubit gates, two-qubit gates)`.
    pub fn gate_counts(&self) -> (usize, usize) {
        (
            self.parameter_count(),
            self.n_layers * self.entanglement_map.len(),
        )
    }

    /// Same ansatz at a different depth.
    pub fn with_layers(&self, n_layers: usize) -> Self {
        PqcSpec {
            n_layers,
            ..self.clone()
        }
    }

    /// Same structure, different entangler.
    pub fn with_entangler(&self, entangler: EntanglerKind) -> Self {
        PqcSpec {
            entangler,
            ..self.clone()
        }
    }

    /// Entangler acting on a given pair, honouring per-pair overrides.
    pub fn entangler_for(&self, control: usize, target: usize) -> EntanglerKind {
        match self.pair_coefficients.get(&(control, target)) {
            Some(c) => self.entangler.with_coefficients(*c),
            None => self.entangler,
        }
    }
}

#[derive(Debug, Clone)]
enum Op {
    Rotation { axis: Pauli, qubit: usize, param: usize },
    Entangler { control: usize, target: usize, gate: usize },
}

/// An ansatz with its entangler unitaries precomputed.
#[derive(Debug, Clone)]
pub struct Ansatz {
    spec: PqcSpec,
    ops: Vec<Op>,
    gates: Vec<Unitary>,
}

impl Ansatz {
    pub fn new(spec: &PqcSpec) -> Result<Self> {
        spec.validate()?;
        let mut gates: Vec<Unitary> = Vec::new();
        let mut gate_of_pair = BTreeMap::new();
        for &(c, t) in &spec.entanglement_map {
            if let std::collections::btree_map::Entry::Vacant(e) = gate_of_pair.entry((c, t)) {
                e.insert(gates.len());
                gates.push(entangler_unitary(&spec.entangler_for(c, t))?);
            }
        }
        let mut ops = Vec::new();
        let mut param = 0;
        let rotation_layer = |ops: &mut Vec<Op>, param: &mut usize| {
            for qubit in 0..spec.n_qubits {
                for &axis in spec.rotations.axes() {
                    ops.push(Op::Rotation { axis, qubit, param: *param });
                    *param += 1;
                }
            }
        };
        for _ in 0..spec.n_layers {
            rotation_layer(&mut ops, &mut param);
            for &(control, target) in &spec.entanglement_map {
                ops.push(Op::Entangler {
                    control,
                    target,
                    gate: gate_of_pair[&(control, target)],
                });
            }
        }
        rotation_layer(&mut ops, &mut param);
        debug_assert_eq!(param, spec.parameter_count());
        Ok(Ansatz {
            spec: spec.clone(),
            ops,
            gates,
        })
    }

    pub fn spec(&self) -> &PqcSpec {
        &self.spec
    }

    pub fn n_qubits(&self) -> usize {
        self.spec.n_qubits
    }

    pub fn parameter_count(&self) -> usize {
        self.spec.parameter_count()
    }

    /// `U(θ)|0…0⟩`.
    pub fn prepare_state(&self, params: &[f64]) -> Result<StateVector> {
        if params.len() != self.parameter_count() {
            return Err(Error::Dimension(format!(
                "ansatz takes {} parameters, got {}",
                self.parameter_count(),
                params.len()
            )));
        }
        let mut state = StateVector::zero(self.spec.n_qubits);
        for op in &self.ops {
            match *op {
                Op::Rotation { axis, qubit, param } => {
                    let m = rotation_gate(axis, params[param]);
                    let g = m.matrix();
                    state.apply_1q(&[[g[(0, 0)], g[(0, 1)]], [g[(1, 0)], g[(1, 1)]]], qubit);
                }
                Op::Entangler { control, target, gate } => {
                    state.apply(&self.gates[gate], &[control, target])?;
                }
            }
        }
        Ok(state)
    }

    /// Index of the rotation parameters acting on `qubit`, in circuit order.
    pub fn parameters_on_qubit(&self, qubit: usize) -> Vec<usize> {
        self.ops
            .iter()
            .filter_map(|op| match *op {
                Op::Rotation { qubit: q, param, .. } if q == qubit => Some(param),
                _ => None,
            })
            .collect()
    }
}

pub fn parameter_count(spec: &PqcSpec) -> usize {
    spec.parameter_count()
}

/// Compiles `spec` and prepares `U(θ)|0…0⟩`.
pub fn prepare_state(spec: &PqcSpec, params: &[f64]) -> Result<StateVector> {
    Ansatz::new(spec)?.prepare_state(params)
}

/// Gate timings for the serial-layer duration estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DurationModel {
    pub single_qubit_ns: f64,
    pub entangler_ns_per_pair: f64,
}

impl DurationModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.single_qubit_ns > 0.0 && self.entangler_ns_per_pair > 0.0) {
            return Err(Error::invalid("gate durations must be > 0"));
        }
        Ok(())
    }
}

/// Per-entangler gate lengths used to build a [`DurationModel`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DurationProfile {
    pub single_qubit_ns: f64,
    pub cnot_ns: f64,
    pub cr_angle_ns: f64,
    pub cr_duration_ns: f64,
}

const REPRESENTATIVE_DURATIONS: &str = include_str!("../data/durations_representative.json");

impl DurationProfile {
    /// Representative device timings shipped with the crate.
    pub fn representative() -> Self {
        serde_json::from_str(REPRESENTATIVE_DURATIONS).expect("bundled durations parse")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let p: DurationProfile = serde_json::from_str(&text)?;
        p.model_for(&EntanglerKind::Cnot).validate()?;
        p.model_for(&EntanglerKind::cr_angle(CrCoefficients::zero())).validate()?;
        p.model_for(&EntanglerKind::cr_duration(CrCoefficients::zero())).validate()?;
        Ok(p)
    }

    /// Timings implied by a calibration: mean CNOT and single-qubit times,
    /// the π/4 tone length from the mean `f_zx`, and the fixed 150 ns tone.
    pub fn from_calibration(cal: &Calibration) -> Result<Self> {
        let avg = cal.average_coefficients();
        Ok(DurationProfile {
            single_qubit_ns: cal.mean_single_qubit_ns(),
            cnot_ns: cal.mean_cnot_ns(),
            cr_angle_ns: crate::cr::duration_for_zx_angle(&avg, DEFAULT_CR_ANGLE)?,
            cr_duration_ns: DEFAULT_CR_DURATION_NS,
        })
    }

    pub fn model_for(&self, kind: &EntanglerKind) -> DurationModel {
        let entangler_ns_per_pair = match kind {
            EntanglerKind::Cnot => self.cnot_ns,
            EntanglerKind::CrAngle { .. } => self.cr_angle_ns,
            EntanglerKind::CrDuration { .. } => self.cr_duration_ns,
        };
        DurationModel {
            single_qubit_ns: self.single_qubit_ns,
            entangler_ns_per_pair,
        }
    }
}

/// Serial-layer schedule length in ns, measurement excluded:
/// `L·(slots·t_1q + pairs·t_2q) + slots·t_1q`.
pub fn estimate_duration(spec: &PqcSpec, model: &DurationModel) -> Result<f64> {
    model.validate()?;
    let rotation_ns = spec.rotation_slots() as f64 * model.single_qubit_ns;
    let chain_ns = spec.entanglement_map.len() as f64 * model.entangler_ns_per_pair;
    Ok(spec.n_layers as f64 * (rotation_ns + chain_ns) + rotation_ns)
}

/// JSON form of an ansatz as consumed by the CLI and other front ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PqcConfig {
    pub n: usize,
    pub layers: usize,
    pub rotations: RotationSet,
    /// `cnot`, `cr-ang` or `cr-dur`.
    pub entangler: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angle: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_ns: Option<f64>,
}

impl PqcConfig {
    /// Resolves to a spec. With a calibration file, each pair takes its own
    /// record and missing pairs fall back to the file average; without one,
    /// every pair uses the bundled device average.
    pub fn to_spec(&self) -> Result<PqcSpec> {
        let calibration = match &self.calibration {
            Some(p) => Some(Calibration::load(p)?),
            None => None,
        };
        self.to_spec_with(calibration.as_ref())
    }

    pub fn to_spec_with(&self, calibration: Option<&Calibration>) -> Result<PqcSpec> {
        let shared = calibration
            .map(|c| c.average_coefficients())
            .unwrap_or_else(CrCoefficients::device_average);
        let kind = parse_entangler(
            &self.entangler,
            shared,
            self.angle.unwrap_or(DEFAULT_CR_ANGLE),
            self.duration_ns.unwrap_or(DEFAULT_CR_DURATION_NS),
        )?;
        let mut spec = build_pqc(self.n, self.layers, self.rotations, kind)?;
        if let (Some(cal), Some(_)) = (calibration, kind.coefficients()) {
            for &(c, t) in &spec.entanglement_map {
                if let Some(r) = cal.record_for(c, t) {
                    spec.pair_coefficients.insert((c, t), r.coefficients);
                }
            }
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Maps a CLI label to an entangler kind.
pub fn parse_entangler(
    label: &str,
    coefficients: CrCoefficients,
    angle: f64,
    duration_ns: f64,
) -> Result<EntanglerKind> {
    match label {
        "cnot" => Ok(EntanglerKind::Cnot),
        "cr-ang" => Ok(EntanglerKind::CrAngle { angle, coefficients }),
        "cr-dur" => Ok(EntanglerKind::CrDuration {
            duration_ns,
            coefficients,
        }),
        other => Err(Error::invalid(format!(
            "unknown entangler {other:?} (expected cnot, cr-ang or cr-dur)"
        ))),
    }
}
