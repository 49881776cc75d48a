//! Cross-resonance effective Hamiltonian and the entanglers built from it.
//!
//! Coefficients are frequencies in MHz; the Hamiltonian carries the 2π so
//! that it is in rad/µs, and durations are given in ns. One MHz held for
//! 1000 ns is one full cycle.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::sim::{cnot, kron, pauli_matrix, CMatrix, Pauli, Unitary};
use crate::{Error, Result};

/// Sanity bound on any coefficient, MHz.
pub const MAX_COEFFICIENT_MHZ: f64 = 1000.0;
/// Upper bound on a CR tone duration, ns.
pub const MAX_DURATION_NS: f64 = 10_000.0;
/// Fixed tone length of the duration-defined entangler.
pub const DEFAULT_CR_DURATION_NS: f64 = 150.0;
/// ZX angle targeted by the angle-defined entangler.
pub const DEFAULT_CR_ANGLE: f64 = PI / 4.0;

const NS_PER_US: f64 = 1000.0;

/// The seven CR Hamiltonian strengths, MHz. Control is the first tensor factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrCoefficients {
    #[serde(rename = "f_zi")]
    pub zi: f64,
    #[serde(rename = "f_zx")]
    pub zx: f64,
    #[serde(rename = "f_zy")]
    pub zy: f64,
    #[serde(rename = "f_zz")]
    pub zz: f64,
    #[serde(rename = "f_ix")]
    pub ix: f64,
    #[serde(rename = "f_iy")]
    pub iy: f64,
    #[serde(rename = "f_iz")]
    pub iz: f64,
}

impl Default for CrCoefficients {
    fn default() -> Self {
        Self::zero()
    }
}

impl CrCoefficients {
    pub const fn zero() -> Self {
        CrCoefficients {
            zi: 0.0,
            zx: 0.0,
            zy: 0.0,
            zz: 0.0,
            ix: 0.0,
            iy: 0.0,
            iz: 0.0,
        }
    }

    /// Average tone strengths measured across the pairs of a 27-qubit
    /// heavy-hex device.
    pub const fn device_average() -> Self {
        CrCoefficients {
            zi: 14.5783,
            zx: 0.69645487,
            zy: -0.0112463,
            zz: -0.04056,
            ix: -0.1102794,
            iy: 0.03167672,
            iz: 0.03557382,
        }
    }

    /// Only a ZX term of the given strength.
    pub const fn pure_zx(zx: f64) -> Self {
        let mut c = Self::zero();
        c.zx = zx;
        c
    }

    pub fn as_array(&self) -> [f64; 7] {
        [self.zi, self.zx, self.zy, self.zz, self.ix, self.iy, self.iz]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in ["f_zi", "f_zx", "f_zy", "f_zz", "f_ix", "f_iy", "f_iz"]
            .iter()
            .zip(self.as_array())
        {
            if !v.is_finite() || v.abs() >= MAX_COEFFICIENT_MHZ {
                return Err(Error::invalid(format!(
                    "{name} = {v} MHz is outside the ±{MAX_COEFFICIENT_MHZ} MHz bound"
                )));
            }
        }
        Ok(())
    }

    /// Effective field on the target, MHz, with the control held in `|p⟩`:
    /// `(f_ix ± f_zx, f_iy ± f_zy, f_iz ± f_zz)`, `+` for `p = 0`.
    pub fn target_field(&self, control: u8) -> [f64; 3] {
        let s = if control == 0 { 1.0 } else { -1.0 };
        [self.ix + s * self.zx, self.iy + s * self.zy, self.iz + s * self.zz]
    }

    /// Inverse of [`target_field`](Self::target_field).
    pub fn from_target_fields(field0: [f64; 3], field1: [f64; 3], zi: f64) -> Self {
        let half_diff = |k: usize| (field0[k] - field1[k]) / 2.0;
        let half_sum = |k: usize| (field0[k] + field1[k]) / 2.0;
        CrCoefficients {
            zi,
            zx: half_diff(0),
            zy: half_diff(1),
            zz: half_diff(2),
            ix: half_sum(0),
            iy: half_sum(1),
            iz: half_sum(2),
        }
    }

    /// Elementwise mean of a nonempty set of records.
    pub fn mean<'a, I: IntoIterator<Item = &'a CrCoefficients>>(items: I) -> Option<Self> {
        let mut acc = [0.0; 7];
        let mut n = 0usize;
        for c in items {
            for (a, v) in acc.iter_mut().zip(c.as_array()) {
                *a += v;
            }
            n += 1;
        }
        if n == 0 {
            return None;
        }
        let m = acc.map(|a| a / n as f64);
        Some(CrCoefficients {
            zi: m[0],
            zx: m[1],
            zy: m[2],
            zz: m[3],
            ix: m[4],
            iy: m[5],
            iz: m[6],
        })
    }
}

/// `H = 2π·[Z⊗A/2 + I⊗B/2]` in rad/µs, with `A = f_zi·I + f_zx·X + f_zy·Y + f_zz·Z`
/// and `B = f_ix·X + f_iy·Y + f_iz·Z`.
pub fn build_cr_hamiltonian(c: &CrCoefficients) -> CMatrix {
    let p = |op| pauli_matrix(op);
    let a = p(Pauli::I) * Complex64::from(c.zi)
        + p(Pauli::X) * Complex64::from(c.zx)
        + p(Pauli::Y) * Complex64::from(c.zy)
        + p(Pauli::Z) * Complex64::from(c.zz);
    let b = p(Pauli::X) * Complex64::from(c.ix)
        + p(Pauli::Y) * Complex64::from(c.iy)
        + p(Pauli::Z) * Complex64::from(c.iz);
    let h = p(Pauli::Z).kronecker(&a) + p(Pauli::I).kronecker(&b);
    h * Complex64::from(PI)
}

/// `exp(−i·H·t)` for a tone of `duration_ns`.
///
/// `H` commutes with `Z⊗I`, so each control block is a target rotation
/// `exp(−iπτ Ω(p)·σ)` times the `±f_zi` phase, evaluated in closed form.
pub fn cr_unitary(c: &CrCoefficients, duration_ns: f64) -> Result<Unitary> {
    c.validate()?;
    if !duration_ns.is_finite() || duration_ns < 0.0 {
        return Err(Error::invalid(format!(
            "CR duration must be finite and >= 0, got {duration_ns}"
        )));
    }
    let tau = duration_ns / NS_PER_US;
    let mut m = CMatrix::zeros(4, 4);
    for control in 0..2u8 {
        let s = if control == 0 { 1.0 } else { -1.0 };
        let phase = Complex64::from_polar(1.0, -PI * s * c.zi * tau);
        let [fx, fy, fz] = c.target_field(control);
        let mag = (fx * fx + fy * fy + fz * fz).sqrt();
        let half_angle = PI * mag * tau;
        let cos = half_angle.cos();
        // sin(φ/2)·n̂, written without dividing by |Ω| when it vanishes
        let (sx, sy, sz) = if mag > 0.0 {
            let k = half_angle.sin() / mag;
            (k * fx, k * fy, k * fz)
        } else {
            (0.0, 0.0, 0.0)
        };
        let block = [
            [Complex64::new(cos, -sz), Complex64::new(-sy, -sx)],
            [Complex64::new(sy, -sx), Complex64::new(cos, sz)],
        ];
        let o = 2 * control as usize;
        for r in 0..2 {
            for col in 0..2 {
                m[(o + r, o + col)] = phase * block[r][col];
            }
        }
    }
    Ok(Unitary::from_matrix_unchecked(m))
}

/// Tone length, ns, for which the ZX term alone rotates by `theta`:
/// `t = θ / (2π·|f_zx|)`.
pub fn duration_for_zx_angle(c: &CrCoefficients, theta: f64) -> Result<f64> {
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(Error::invalid(format!("ZX angle must be > 0, got {theta}")));
    }
    if c.zx == 0.0 {
        return Err(Error::invalid("f_zx = 0: the tone has no entangling rate"));
    }
    Ok(theta / (2.0 * PI * c.zx.abs()) * NS_PER_US)
}

/// `exp(−i·θ/2·Z⊗X)`, the ideal ZX rotation.
pub fn rzx(theta: f64) -> Unitary {
    let zx = kron(
        &Unitary::from_matrix_unchecked(pauli_matrix(Pauli::Z)),
        &Unitary::from_matrix_unchecked(pauli_matrix(Pauli::X)),
    );
    let (s, co) = (theta / 2.0).sin_cos();
    let m = CMatrix::identity(4, 4) * Complex64::from(co) - zx.matrix() * Complex64::new(0.0, s);
    Unitary::from_matrix_unchecked(m)
}

pub fn cnot_unitary() -> Unitary {
    cnot()
}

/// Two-qubit entangler placed between neighbouring ansatz qubits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EntanglerKind {
    /// Echoed-CR CNOT, modelled as the ideal gate.
    Cnot,
    /// Single bare CR tone calibrated to a ZX angle (`angle` in rad).
    CrAngle {
        angle: f64,
        coefficients: CrCoefficients,
    },
    /// Single bare CR tone of fixed length.
    CrDuration {
        duration_ns: f64,
        coefficients: CrCoefficients,
    },
}

impl EntanglerKind {
    pub fn cr_angle(coefficients: CrCoefficients) -> Self {
        EntanglerKind::CrAngle {
            angle: DEFAULT_CR_ANGLE,
            coefficients,
        }
    }

    pub fn cr_duration(coefficients: CrCoefficients) -> Self {
        EntanglerKind::CrDuration {
            duration_ns: DEFAULT_CR_DURATION_NS,
            coefficients,
        }
    }

    /// Short name used in CLI flags and CSV output.
    pub fn label(&self) -> &'static str {
        match self {
            EntanglerKind::Cnot => "cnot",
            EntanglerKind::CrAngle { .. } => "cr-ang",
            EntanglerKind::CrDuration { .. } => "cr-dur",
        }
    }

    pub fn coefficients(&self) -> Option<&CrCoefficients> {
        match self {
            EntanglerKind::Cnot => None,
            EntanglerKind::CrAngle { coefficients, .. }
            | EntanglerKind::CrDuration { coefficients, .. } => Some(coefficients),
        }
    }

    /// Same kind with different coefficients; CNOT is unchanged.
    pub fn with_coefficients(&self, c: CrCoefficients) -> Self {
        match *self {
            EntanglerKind::Cnot => EntanglerKind::Cnot,
            EntanglerKind::CrAngle { angle, .. } => EntanglerKind::CrAngle {
                angle,
                coefficients: c,
            },
            EntanglerKind::CrDuration { duration_ns, .. } => EntanglerKind::CrDuration {
                duration_ns,
                coefficients: c,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            EntanglerKind::Cnot => Ok(()),
            EntanglerKind::CrAngle { angle, coefficients } => {
                if !(*angle > 0.0 && *angle <= PI) {
                    return Err(Error::invalid(format!("CR angle {angle} outside (0, π]")));
                }
                coefficients.validate()
            }
            EntanglerKind::CrDuration {
                duration_ns,
                coefficients,
            } => {
                if !(*duration_ns > 0.0 && *duration_ns <= MAX_DURATION_NS) {
                    return Err(Error::invalid(format!(
                        "CR duration {duration_ns} ns outside (0, {MAX_DURATION_NS}]"
                    )));
                }
                coefficients.validate()
            }
        }
    }

    /// Tone length in ns for the CR kinds, `None` for CNOT.
    pub fn tone_duration_ns(&self) -> Result<Option<f64>> {
        match self {
            EntanglerKind::Cnot => Ok(None),
            EntanglerKind::CrAngle { angle, coefficients } => {
                duration_for_zx_angle(coefficients, *angle).map(Some)
            }
            EntanglerKind::CrDuration { duration_ns, .. } => Ok(Some(*duration_ns)),
        }
    }
}

/// The 4x4 unitary of an entangler. CR variants keep every Hamiltonian
/// term, so their single-qubit by-products stay in the gate.
pub fn entangler_unitary(kind: &EntanglerKind) -> Result<Unitary> {
    kind.validate()?;
    match kind {
        EntanglerKind::Cnot => Ok(cnot_unitary()),
        EntanglerKind::CrAngle { angle, coefficients } => {
            cr_unitary(coefficients, duration_for_zx_angle(coefficients, *angle)?)
        }
        EntanglerKind::CrDuration {
            duration_ns,
            coefficients,
        } => cr_unitary(coefficients, *duration_ns),
    }
}

/// One calibrated pair: `(control, target)` plus its gate timings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRecord {
    pub pair: [usize; 2],
    #[serde(flatten)]
    pub coefficients: CrCoefficients,
    pub cnot_duration_ns: f64,
    pub single_qubit_duration_ns: f64,
}

/// Per-pair calibration data, stored on disk as a JSON list of records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Calibration {
    pub records: Vec<CalibrationRecord>,
}

const BUNDLED_CALIBRATION: &str = include_str!("../data/calibration_default.json");

impl Calibration {
    /// Table of device-average coefficients for every pair of a 16-qubit line.
    pub fn bundled() -> Self {
        Self::from_json(BUNDLED_CALIBRATION).expect("bundled calibration parses")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cal: Calibration = serde_json::from_str(text)?;
        cal.validate()?;
        Ok(cal)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Json(j) => Error::Parse {
                source_name: path.display().to_string(),
                line: j.line(),
                message: j.to_string(),
            },
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("calibration serialises")
    }

    pub fn validate(&self) -> Result<()> {
        if self.records.is_empty() {
            return Err(Error::invalid("calibration has no records"));
        }
        for (i, r) in self.records.iter().enumerate() {
            if r.pair[0] == r.pair[1] {
                return Err(Error::invalid(format!("record {i}: pair {:?} is degenerate", r.pair)));
            }
            if self.records[..i].iter().any(|o| o.pair == r.pair) {
                return Err(Error::invalid(format!("record {i}: duplicate pair {:?}", r.pair)));
            }
            r.coefficients.validate()?;
            if !(r.cnot_duration_ns > 0.0 && r.single_qubit_duration_ns > 0.0) {
                return Err(Error::invalid(format!("record {i}: durations must be > 0")));
            }
        }
        Ok(())
    }

    pub fn record_for(&self, control: usize, target: usize) -> Option<&CalibrationRecord> {
        self.records.iter().find(|r| r.pair == [control, target])
    }

    pub fn average_coefficients(&self) -> CrCoefficients {
        CrCoefficients::mean(self.records.iter().map(|r| &r.coefficients))
            .expect("validated calibration is nonempty")
    }

    pub fn mean_cnot_ns(&self) -> f64 {
        self.records.iter().map(|r| r.cnot_duration_ns).sum::<f64>() / self.records.len() as f64
    }

    pub fn mean_single_qubit_ns(&self) -> f64 {
        self.records.iter().map(|r| r.single_qubit_duration_ns).sum::<f64>()
            / self.records.len() as f64
    }
}
