//! Cross-resonance Hamiltonian tomography: synthetic target-qubit Bloch
//! trajectories, their fit back to coefficients, and the Ramsey scan that
//! recovers the control-only `f_zi` term.
//!
//! Durations are in ns, fields in MHz. A field `Ω` precesses the target by
//! `2π·|Ω|·t` radians, with `t` in µs.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::cr::{cr_unitary, CrCoefficients, MAX_DURATION_NS};
use crate::seeding::stream_rng;
use crate::sim::{Pauli, PauliString, StateVector};
use crate::{Error, Result};

pub const DEFAULT_GRID_POINTS: usize = 64;
pub const DEFAULT_T_MAX_NS: f64 = 1200.0;
pub const MIN_GRID_POINTS: usize = 8;
pub const MIN_POINTS_PER_PERIOD: f64 = 8.0;

const EXACT_RESIDUAL_THRESHOLD: f64 = 1e-6;
const EXACT_SENSITIVITY: f64 = 1e-7;
const SIGN_STARTS: usize = 8;
const FFT_OVERSAMPLE: usize = 16;

/// Control-qubit preparation for a series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ControlState {
    #[serde(rename = "0")]
    Zero,
    #[serde(rename = "1")]
    One,
    /// `(|0⟩+|1⟩)/√2`, used by the Ramsey scan.
    #[serde(rename = "+")]
    Plus,
}

impl ControlState {
    pub fn label(self) -> &'static str {
        match self {
            ControlState::Zero => "0",
            ControlState::One => "1",
            ControlState::Plus => "+",
        }
    }
}

impl fmt::Display for ControlState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ControlState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "0" => Ok(ControlState::Zero),
            "1" => Ok(ControlState::One),
            "+" => Ok(ControlState::Plus),
            other => Err(Error::invalid(format!("unknown control state {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Basis {
    X,
    Y,
    Z,
}

impl Basis {
    pub const ALL: [Basis; 3] = [Basis::X, Basis::Y, Basis::Z];

    pub fn pauli(self) -> Pauli {
        match self {
            Basis::X => Pauli::X,
            Basis::Y => Pauli::Y,
            Basis::Z => Pauli::Z,
        }
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.pauli().as_char())
    }
}

impl FromStr for Basis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "X" | "x" => Ok(Basis::X),
            "Y" | "y" => Ok(Basis::Y),
            "Z" | "z" => Ok(Basis::Z),
            other => Err(Error::invalid(format!("unknown basis {other:?}"))),
        }
    }
}

/// One measured expectation value per duration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TomographySeries {
    pub control: ControlState,
    pub basis: Basis,
    pub durations_ns: Vec<f64>,
    pub values: Vec<f64>,
    /// 0 means exact expectations.
    pub shots: u64,
}

impl TomographySeries {
    pub fn validate(&self) -> Result<()> {
        if self.values.len() != self.durations_ns.len() {
            return Err(Error::Dimension(format!(
                "{} values for {} durations",
                self.values.len(),
                self.durations_ns.len()
            )));
        }
        check_durations(&self.durations_ns)?;
        let eps = if self.shots == 0 { 1e-9 } else { 3.0 / (self.shots as f64).sqrt() };
        if let Some(v) = self.values.iter().find(|v| !v.is_finite() || v.abs() > 1.0 + eps) {
            return Err(Error::invalid(format!("expectation value {v} outside [-1, 1]")));
        }
        Ok(())
    }
}

/// `n_points` evenly spaced durations over `[0, t_max_ns]`.
pub fn duration_grid(n_points: usize, t_max_ns: f64) -> Result<Vec<f64>> {
    if n_points < 2 || !(t_max_ns > 0.0) || t_max_ns > MAX_DURATION_NS {
        return Err(Error::invalid(format!(
            "duration grid needs >= 2 points and 0 < t_max <= {MAX_DURATION_NS} ns"
        )));
    }
    let step = t_max_ns / (n_points - 1) as f64;
    Ok((0..n_points).map(|i| i as f64 * step).collect())
}

fn check_durations(durations: &[f64]) -> Result<()> {
    if durations.is_empty() {
        return Err(Error::invalid("empty duration grid"));
    }
    if durations.iter().any(|t| !t.is_finite() || *t < 0.0 || *t > MAX_DURATION_NS) {
        return Err(Error::invalid(format!("durations must lie in [0, {MAX_DURATION_NS}] ns")));
    }
    if durations.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("durations must be strictly increasing"));
    }
    Ok(())
}

fn sample_expectation<R: Rng>(value: f64, shots: u64, rng: &mut R) -> f64 {
    let p = ((1.0 + value) / 2.0).clamp(0.0, 1.0);
    let k = Binomial::new(shots, p).expect("p is clamped to [0, 1]").sample(rng);
    2.0 * k as f64 / shots as f64 - 1.0
}

fn evolve(c: &CrCoefficients, initial: &StateVector, t_ns: f64) -> Result<StateVector> {
    let mut psi = initial.clone();
    psi.apply(&cr_unitary(c, t_ns)?, &[0, 1])?;
    Ok(psi)
}

fn measure(
    c: &CrCoefficients,
    initial: &StateVector,
    qubit: usize,
    bases: &[Basis],
    durations: &[f64],
) -> Result<Vec<Vec<f64>>> {
    let mut out = vec![Vec::with_capacity(durations.len()); bases.len()];
    for &t in durations {
        let psi = evolve(c, initial, t)?;
        for (col, b) in out.iter_mut().zip(bases) {
            col.push(PauliString::single(2, qubit, b.pauli()).expectation(&psi)?);
        }
    }
    Ok(out)
}

fn finish_series(
    control: ControlState,
    bases: &[Basis],
    columns: Vec<Vec<f64>>,
    durations: &[f64],
    shots: u64,
    seed: u64,
    stream_offset: u64,
) -> Vec<TomographySeries> {
    bases
        .iter()
        .zip(columns)
        .enumerate()
        .map(|(i, (&basis, exact))| {
            let values = if shots == 0 {
                exact
            } else {
                let mut rng = stream_rng(seed, stream_offset + i as u64);
                exact.iter().map(|&v| sample_expectation(v, shots, &mut rng)).collect()
            };
            TomographySeries {
                control,
                basis,
                durations_ns: durations.to_vec(),
                values,
                shots,
            }
        })
        .collect()
}

/// Target-qubit `⟨X⟩, ⟨Y⟩, ⟨Z⟩` versus CR duration for the control in `|0⟩`
/// and `|1⟩`, in that order. `shots = 0` gives exact values; otherwise each
/// point is a binomial estimate.
pub fn simulate_ht(c: &CrCoefficients, durations: &[f64], shots: u64, seed: u64) -> Result<Vec<TomographySeries>> {
    check_durations(durations)?;
    c.validate()?;
    let mut all = Vec::with_capacity(6);
    for (p, control) in [ControlState::Zero, ControlState::One].into_iter().enumerate() {
        let initial = StateVector::basis(2, p << 1);
        let columns = measure(c, &initial, 1, &Basis::ALL, durations)?;
        all.extend(finish_series(control, &Basis::ALL, columns, durations, shots, seed, 3 * p as u64));
    }
    Ok(all)
}

/// Control-qubit `⟨X⟩` and `⟨Y⟩` after preparing `|+⟩⊗|0⟩` and evolving.
pub fn simulate_ramsey_zi(
    c: &CrCoefficients,
    durations: &[f64],
    shots: u64,
    seed: u64,
) -> Result<Vec<TomographySeries>> {
    check_durations(durations)?;
    c.validate()?;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut amps = vec![Complex64::new(0.0, 0.0); 4];
    amps[0] = Complex64::new(h, 0.0);
    amps[2] = Complex64::new(h, 0.0);
    let initial = StateVector::from_amplitudes(amps)?;
    let bases = [Basis::X, Basis::Y];
    let columns = measure(c, &initial, 0, &bases, durations)?;
    Ok(finish_series(ControlState::Plus, &bases, columns, durations, shots, seed, 6))
}

fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Bloch vector of a target starting at `(0, 0, 1)` after precessing about
/// `omega_mhz` for `t_ns`.
pub fn bloch_trajectory(omega_mhz: [f64; 3], t_ns: f64) -> [f64; 3] {
    let w = norm3(omega_mhz);
    if w == 0.0 {
        return [0.0, 0.0, 1.0];
    }
    let [nx, ny, nz] = omega_mhz.map(|o| o / w);
    let phi = 2.0 * PI * w * t_ns / 1000.0;
    let (s, c) = phi.sin_cos();
    // r0 = z, n × z = (ny, −nx, 0)
    [ny * s + nx * nz * (1.0 - c), -nx * s + ny * nz * (1.0 - c), c + nz * nz * (1.0 - c)]
}

/// Options for the nonlinear fits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// RMS residual below which a fit counts as converged. Defaults to `1e-6`
    /// for exact data and `3/√shots` for sampled data.
    pub residual_threshold: Option<f64>,
    pub max_iterations: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            residual_threshold: None,
            max_iterations: 200,
        }
    }
}

impl FitOptions {
    fn threshold(&self, shots: u64) -> f64 {
        self.residual_threshold.unwrap_or(if shots == 0 {
            EXACT_RESIDUAL_THRESHOLD
        } else {
            3.0 / (shots as f64).sqrt()
        })
    }
}

/// Fitted target field for one control state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlFit {
    pub field_mhz: [f64; 3],
    pub residual_rms: f64,
    pub converged: bool,
    pub below_sensitivity: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    /// `f_zi` is always 0 here; it comes from [`fit_zi`].
    pub coefficients: CrCoefficients,
    pub residual_rms: f64,
    pub converged: bool,
    pub below_sensitivity: bool,
    pub control0: ControlFit,
    pub control1: ControlFit,
}

impl FitResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("fit result serializes")
    }
}

struct Trajectory<'a> {
    t_us: Vec<f64>,
    xyz: [&'a [f64]; 3],
    shots: u64,
}

impl Trajectory<'_> {
    fn len(&self) -> usize {
        self.t_us.len()
    }

    fn sum_sq(&self, omega: [f64; 3]) -> f64 {
        self.t_us
            .iter()
            .enumerate()
            .map(|(k, &t)| {
                let r = bloch_trajectory(omega, t * 1000.0);
                (0..3).map(|a| (r[a] - self.xyz[a][k]).powi(2)).sum::<f64>()
            })
            .sum()
    }

    fn rms(&self, omega: [f64; 3]) -> f64 {
        (self.sum_sq(omega) / (3 * self.len()) as f64).sqrt()
    }

    fn max_deviation(&self) -> f64 {
        (0..self.len())
            .map(|k| self.xyz[0][k].abs().max(self.xyz[1][k].abs()).max((1.0 - self.xyz[2][k]).abs()))
            .fold(0.0, f64::max)
    }

    fn span_us(&self) -> f64 {
        self.t_us[self.len() - 1] - self.t_us[0]
    }

    fn max_step_us(&self) -> f64 {
        self.t_us.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// Least squares of each axis against `{1, cos 2πft, sin 2πft}`.
    /// Returns the summed squared residual and the `[const, cos, sin]`
    /// coefficients per axis.
    fn harmonic_fit(&self, f: f64) -> (f64, [[f64; 3]; 3]) {
        let mut ata = Matrix3::<f64>::zeros();
        let mut atb = [Vector3::<f64>::zeros(); 3];
        for (k, &t) in self.t_us.iter().enumerate() {
            let (s, c) = (2.0 * PI * f * t).sin_cos();
            let row = Vector3::new(1.0, c, s);
            ata += row * row.transpose();
            for a in 0..3 {
                atb[a] += row * self.xyz[a][k];
            }
        }
        let Some(chol) = ata.cholesky() else {
            return (f64::INFINITY, [[0.0; 3]; 3]);
        };
        let mut coeffs = [[0.0; 3]; 3];
        let mut ssr = 0.0;
        for a in 0..3 {
            let sol = chol.solve(&atb[a]);
            coeffs[a] = [sol[0], sol[1], sol[2]];
            for (k, &t) in self.t_us.iter().enumerate() {
                let (s, c) = (2.0 * PI * f * t).sin_cos();
                ssr += (sol[0] + sol[1] * c + sol[2] * s - self.xyz[a][k]).powi(2);
            }
        }
        (ssr, coeffs)
    }

    /// Field estimate at precession frequency `f` from the harmonic coefficients.
    fn field_seed(&self, f: f64) -> [f64; 3] {
        let (_, [cx, cy, cz]) = self.harmonic_fit(f);
        let nx = -cy[2];
        let ny = cx[2];
        let transverse = nx * nx + ny * ny;
        let nz = if transverse > 1e-2 {
            (cx[0] * nx + cy[0] * ny) / transverse
        } else {
            cz[0].max(0.0).sqrt()
        };
        let n = norm3([nx, ny, nz]);
        if n == 0.0 {
            return [f, 0.0, 0.0];
        }
        [nx * f / n, ny * f / n, nz * f / n]
    }

    fn min_frequency(&self) -> f64 {
        0.25 / self.span_us()
    }

    fn nyquist(&self) -> f64 {
        0.5 / self.max_step_us()
    }

    /// Peak of the summed power spectrum of the mean-removed axes.
    fn fft_peak(&self) -> Option<f64> {
        let n = self.len();
        let padded = (n * FFT_OVERSAMPLE).next_power_of_two();
        let fft = FftPlanner::<f64>::new().plan_fft_forward(padded);
        let mut power = vec![0.0; padded / 2];
        for axis in self.xyz {
            let mean = axis.iter().sum::<f64>() / n as f64;
            let mut buf: Vec<Complex64> = axis.iter().map(|v| Complex64::new(v - mean, 0.0)).collect();
            buf.resize(padded, Complex64::new(0.0, 0.0));
            fft.process(&mut buf);
            for (p, b) in power.iter_mut().zip(&buf) {
                *p += b.norm_sqr();
            }
        }
        let dt = self.span_us() / (n - 1) as f64;
        let (k, &peak) = power
            .iter()
            .enumerate()
            .skip(1)
            .max_by(|a, b| a.1.total_cmp(b.1))?;
        (peak > 0.0).then(|| k as f64 / (padded as f64 * dt))
    }

    /// Minimise the harmonic residual over `[lo, hi]` by a grid scan
    /// followed by golden-section refinement.
    fn refine_frequency(&self, lo: f64, hi: f64) -> f64 {
        let steps = 64;
        let h = (hi - lo) / steps as f64;
        let best = (0..=steps)
            .map(|i| {
                let f = lo + i as f64 * h;
                (self.harmonic_fit(f).0, f)
            })
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .map_or(lo, |(_, f)| f);
        let (mut a, mut b) = ((best - h).max(lo), (best + h).min(hi));
        let g = (5f64.sqrt() - 1.0) / 2.0;
        let mut c = b - g * (b - a);
        let mut d = a + g * (b - a);
        let (mut fc, mut fd) = (self.harmonic_fit(c).0, self.harmonic_fit(d).0);
        for _ in 0..60 {
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - g * (b - a);
                fc = self.harmonic_fit(c).0;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + g * (b - a);
                fd = self.harmonic_fit(d).0;
            }
        }
        (a + b) / 2.0
    }

    /// Local minima of the harmonic residual on a coarse global scan,
    /// best first.
    fn scan_frequencies(&self, count: usize) -> Vec<f64> {
        let lo = self.min_frequency();
        let hi = self.nyquist();
        let step = 1.0 / (16.0 * self.span_us());
        let grid: Vec<f64> = (0..)
            .map(|i| lo + i as f64 * step)
            .take_while(|&f| f <= hi)
            .collect();
        let ssr: Vec<f64> = grid.iter().map(|&f| self.harmonic_fit(f).0).collect();
        let mut minima: Vec<(f64, f64)> = (0..grid.len())
            .filter(|&i| (i == 0 || ssr[i] <= ssr[i - 1]) && (i + 1 == grid.len() || ssr[i] <= ssr[i + 1]))
            .map(|i| (ssr[i], grid[i]))
            .collect();
        minima.sort_by(|a, b| a.0.total_cmp(&b.0));
        minima
            .into_iter()
            .take(count)
            .map(|(_, f)| self.refine_frequency((f - step).max(lo), (f + step).min(hi)))
            .collect()
    }

    fn residuals(&self, omega: [f64; 3], out: &mut Vec<f64>) {
        out.clear();
        for (k, &t) in self.t_us.iter().enumerate() {
            let r = bloch_trajectory(omega, t * 1000.0);
            for a in 0..3 {
                out.push(r[a] - self.xyz[a][k]);
            }
        }
    }

    /// Levenberg-Marquardt on the three field components.
    fn levenberg_marquardt(&self, start: [f64; 3], max_iterations: usize) -> [f64; 3] {
        let mut omega = start;
        let mut cost = self.sum_sq(omega);
        let mut lambda = 1e-3;
        let mut r0 = Vec::new();
        let mut rp = Vec::new();
        let mut rm = Vec::new();
        for _ in 0..max_iterations {
            if cost < 1e-30 {
                break;
            }
            self.residuals(omega, &mut r0);
            let m = r0.len();
            let mut jac = vec![[0.0; 3]; m];
            for j in 0..3 {
                let h = 1e-7 * omega[j].abs().max(1e-3);
                let mut up = omega;
                let mut dn = omega;
                up[j] += h;
                dn[j] -= h;
                self.residuals(up, &mut rp);
                self.residuals(dn, &mut rm);
                for i in 0..m {
                    jac[i][j] = (rp[i] - rm[i]) / (2.0 * h);
                }
            }
            let mut jtj = Matrix3::<f64>::zeros();
            let mut jtr = Vector3::<f64>::zeros();
            for (row, &r) in jac.iter().zip(&r0) {
                let v = Vector3::new(row[0], row[1], row[2]);
                jtj += v * v.transpose();
                jtr += v * r;
            }
            let mut improved = false;
            for _ in 0..30 {
                let mut damped = jtj;
                for d in 0..3 {
                    damped[(d, d)] += lambda * jtj[(d, d)].max(1e-12);
                }
                let Some(step) = damped.lu().solve(&(-jtr)) else {
                    lambda *= 10.0;
                    continue;
                };
                let trial = [omega[0] + step[0], omega[1] + step[1], omega[2] + step[2]];
                let trial_cost = self.sum_sq(trial);
                if trial_cost < cost {
                    let small = step.norm() <= 1e-15 * (1.0 + norm3(omega));
                    omega = trial;
                    cost = trial_cost;
                    lambda = (lambda / 10.0).max(1e-15);
                    improved = !small;
                    break;
                }
                lambda *= 10.0;
            }
            if !improved {
                break;
            }
        }
        omega
    }
}

fn find_series(series: &[TomographySeries], control: ControlState, basis: Basis) -> Result<&TomographySeries> {
    series
        .iter()
        .find(|s| s.control == control && s.basis == basis)
        .ok_or_else(|| Error::invalid(format!("missing series for control {control}, basis {basis}")))
}

fn trajectory(series: &[TomographySeries], control: ControlState) -> Result<Trajectory<'_>> {
    let x = find_series(series, control, Basis::X)?;
    let y = find_series(series, control, Basis::Y)?;
    let z = find_series(series, control, Basis::Z)?;
    for s in [x, y, z] {
        s.validate()?;
        if s.durations_ns != x.durations_ns {
            return Err(Error::invalid("tomography series use different duration grids"));
        }
    }
    if x.durations_ns.len() < MIN_GRID_POINTS {
        return Err(Error::GridTooCoarse(format!(
            "{} durations; at least {MIN_GRID_POINTS} are required",
            x.durations_ns.len()
        )));
    }
    Ok(Trajectory {
        t_us: x.durations_ns.iter().map(|t| t / 1000.0).collect(),
        xyz: [&x.values, &y.values, &z.values],
        shots: x.shots.max(y.shots).max(z.shots),
    })
}

fn fit_control(traj: &Trajectory<'_>, opts: &FitOptions) -> Result<ControlFit> {
    let threshold = opts.threshold(traj.shots);
    let sensitivity = if traj.shots == 0 {
        EXACT_SENSITIVITY
    } else {
        4.0 / (traj.shots as f64).sqrt()
    };
    if traj.max_deviation() < sensitivity {
        let rms = traj.rms([0.0; 3]);
        return Ok(ControlFit {
            field_mhz: [0.0; 3],
            residual_rms: rms,
            converged: rms < threshold,
            below_sensitivity: true,
        });
    }

    let lo = traj.min_frequency();
    let hi = traj.nyquist();
    let window = 1.0 / traj.span_us();
    let mut seeds: Vec<f64> = traj
        .fft_peak()
        .map(|f| traj.refine_frequency((f - window).max(lo), (f + window).min(hi)))
        .into_iter()
        .collect();

    let mut best = ([0.0; 3], f64::INFINITY);
    let mut tried = 0;
    loop {
        for &f in &seeds[tried..] {
            let base = traj.field_seed(f);
            for signs in 0..SIGN_STARTS {
                let start: [f64; 3] =
                    std::array::from_fn(|a| if signs >> a & 1 == 1 { -base[a] } else { base[a] });
                let omega = traj.levenberg_marquardt(start, opts.max_iterations);
                let rms = traj.rms(omega);
                if rms < best.1 {
                    best = (omega, rms);
                }
                if best.1 < 1e-3 * threshold {
                    break;
                }
            }
        }
        tried = seeds.len();
        if best.1 < threshold || tried > 1 {
            break;
        }
        seeds.extend(traj.scan_frequencies(4));
        if seeds.len() == tried {
            break;
        }
    }

    let (omega, rms) = best;
    let per_period = 1.0 / (norm3(omega) * traj.max_step_us());
    if per_period < MIN_POINTS_PER_PERIOD {
        return Err(Error::GridTooCoarse(format!(
            "fitted precession of {:.4} MHz leaves {per_period:.1} points per period; \
             need {MIN_POINTS_PER_PERIOD} (max step {:.3} ns)",
            norm3(omega),
            traj.max_step_us() * 1000.0
        )));
    }
    Ok(ControlFit {
        field_mhz: omega,
        residual_rms: rms,
        converged: rms < threshold,
        below_sensitivity: false,
    })
}

/// Fit the six in-plane CR coefficients from the six target series.
pub fn fit_cr_coefficients(series: &[TomographySeries]) -> Result<FitResult> {
    fit_cr_coefficients_with(series, &FitOptions::default())
}

pub fn fit_cr_coefficients_with(series: &[TomographySeries], opts: &FitOptions) -> Result<FitResult> {
    let t0 = trajectory(series, ControlState::Zero)?;
    let t1 = trajectory(series, ControlState::One)?;
    if t0.t_us != t1.t_us {
        return Err(Error::invalid("control-0 and control-1 series use different duration grids"));
    }
    let control0 = fit_control(&t0, opts)?;
    let control1 = fit_control(&t1, opts)?;
    let residual_rms = ((control0.residual_rms.powi(2) + control1.residual_rms.powi(2)) / 2.0).sqrt();
    Ok(FitResult {
        coefficients: CrCoefficients::from_target_fields(control0.field_mhz, control1.field_mhz, 0.0),
        residual_rms,
        converged: control0.converged && control1.converged,
        below_sensitivity: control0.below_sensitivity || control1.below_sensitivity,
        control0,
        control1,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZiFit {
    pub f_zi: f64,
    pub residual_rms: f64,
    pub converged: bool,
    /// Whether the target-overlap phase was removed using fitted in-plane terms.
    pub overlap_corrected: bool,
}

/// `⟨0|V₁†V₀|0⟩` where `V_p` is the target evolution for control `|p⟩`.
fn target_overlap(c: &CrCoefficients, t_us: f64) -> Complex64 {
    let evolve_zero = |field: [f64; 3]| {
        let w = norm3(field);
        let (s, co) = (PI * w * t_us).sin_cos();
        if w == 0.0 {
            return [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
        }
        let [nx, ny, nz] = field.map(|f| f / w);
        // (cos − i sin n·σ)|0⟩
        [Complex64::new(co, -s * nz), Complex64::new(s * ny, -s * nx)]
    };
    let a = evolve_zero(c.target_field(0));
    let b = evolve_zero(c.target_field(1));
    b[0].conj() * a[0] + b[1].conj() * a[1]
}

fn dominant_complex_frequency(samples: &[Complex64], dt_us: f64) -> f64 {
    let padded = (samples.len() * FFT_OVERSAMPLE).next_power_of_two();
    let mut buf = samples.to_vec();
    buf.resize(padded, Complex64::new(0.0, 0.0));
    FftPlanner::<f64>::new().plan_fft_forward(padded).process(&mut buf);
    let (k, _) = buf
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.norm_sqr().total_cmp(&b.1.norm_sqr()))
        .expect("nonempty spectrum");
    let k = if k > padded / 2 { k as f64 - padded as f64 } else { k as f64 };
    k / (padded as f64 * dt_us)
}

/// Estimate `f_zi` from the Ramsey `⟨X⟩, ⟨Y⟩` series on the control.
///
/// The control coherence winds as `e^{i2π f_zi t}` times the conjugate
/// overlap of the two target branches. Passing the in-plane coefficients
/// (e.g. from [`fit_cr_coefficients`]) removes that overlap phase exactly;
/// without them the estimate carries a small bias from target dynamics.
pub fn fit_zi(series: &[TomographySeries], in_plane: Option<&CrCoefficients>) -> Result<ZiFit> {
    fit_zi_with(series, in_plane, &FitOptions::default())
}

pub fn fit_zi_with(series: &[TomographySeries], in_plane: Option<&CrCoefficients>, opts: &FitOptions) -> Result<ZiFit> {
    let x = find_series(series, ControlState::Plus, Basis::X)?;
    let y = find_series(series, ControlState::Plus, Basis::Y)?;
    x.validate()?;
    y.validate()?;
    if x.durations_ns != y.durations_ns {
        return Err(Error::invalid("Ramsey X and Y series use different duration grids"));
    }
    let n = x.durations_ns.len();
    if n < MIN_GRID_POINTS {
        return Err(Error::GridTooCoarse(format!("{n} Ramsey durations; at least {MIN_GRID_POINTS} are required")));
    }
    let t_us: Vec<f64> = x.durations_ns.iter().map(|t| t / 1000.0).collect();
    let w: Vec<Complex64> = (0..n)
        .map(|k| {
            let z = Complex64::new(x.values[k], y.values[k]);
            match in_plane {
                Some(c) => z * target_overlap(c, t_us[k]),
                None => z,
            }
        })
        .collect();

    let dt = (t_us[n - 1] - t_us[0]) / (n - 1) as f64;
    let mut f = dominant_complex_frequency(&w, dt);
    let weights: Vec<f64> = w.iter().map(|v| v.norm_sqr()).collect();
    let floor = 1e-12 * weights.iter().cloned().fold(0.0, f64::max);
    let mut offset = 0.0;
    for _ in 0..3 {
        let mut phases = Vec::with_capacity(n);
        let mut prev: Option<f64> = None;
        for k in 0..n {
            if weights[k] <= floor {
                phases.push(None);
                continue;
            }
            // squaring folds the branch-overlap sign flips away; the slope is halved below
            let raw = (w[k] * Complex64::from_polar(1.0, -2.0 * PI * f * t_us[k])).powi(2).arg();
            let unwrapped = match prev {
                Some(p) => p + (raw - p + PI).rem_euclid(2.0 * PI) - PI,
                None => raw,
            };
            prev = Some(unwrapped);
            phases.push(Some(unwrapped));
        }
        let (mut sw, mut st, mut sp, mut stt, mut stp) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for k in 0..n {
            if let Some(p) = phases[k] {
                let wk = weights[k];
                sw += wk;
                st += wk * t_us[k];
                sp += wk * p;
                stt += wk * t_us[k] * t_us[k];
                stp += wk * t_us[k] * p;
            }
        }
        let denom = sw * stt - st * st;
        if denom.abs() < 1e-300 {
            return Err(Error::invalid("Ramsey signal vanished on the duration grid"));
        }
        let slope = (sw * stp - st * sp) / denom / 2.0;
        offset = (sp / 2.0 - slope * st) / sw;
        f += slope / (2.0 * PI);
    }

    let residual_rms = (w
        .iter()
        .zip(&t_us)
        .map(|(v, &t)| {
            let model = Complex64::from_polar(v.norm(), 2.0 * PI * f * t + offset);
            (v - model).norm_sqr().min((v + model).norm_sqr())
        })
        .sum::<f64>()
        / n as f64)
        .sqrt();
    let shots = x.shots.max(y.shots);
    Ok(ZiFit {
        f_zi: f,
        residual_rms,
        converged: residual_rms < opts.threshold(shots),
        overlap_corrected: in_plane.is_some(),
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    duration_ns: f64,
    control_state: String,
    basis: String,
    value: f64,
}

/// Long-format CSV: `duration_ns,control_state,basis,value`.
pub fn series_to_csv(series: &[TomographySeries]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["duration_ns", "control_state", "basis", "value"])?;
    for s in series {
        for (t, v) in s.durations_ns.iter().zip(&s.values) {
            w.write_record([t.to_string(), s.control.to_string(), s.basis.to_string(), v.to_string()])?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::invalid(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Parse the long-format CSV back into series, grouped by control state and
/// basis. `shots` is attached to every series.
pub fn series_from_csv(text: &str, source_name: &str, shots: u64) -> Result<Vec<TomographySeries>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut groups: BTreeMap<(ControlState, Basis), (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    let parse_err = |line: usize, message: String| Error::Parse {
        source_name: source_name.to_string(),
        line,
        message,
    };
    for (i, row) in reader.deserialize::<CsvRow>().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| parse_err(line, e.to_string()))?;
        let control: ControlState = row.control_state.parse().map_err(|e: Error| parse_err(line, e.to_string()))?;
        let basis: Basis = row.basis.parse().map_err(|e: Error| parse_err(line, e.to_string()))?;
        let entry = groups.entry((control, basis)).or_default();
        entry.0.push(row.duration_ns);
        entry.1.push(row.value);
    }
    if groups.is_empty() {
        return Err(parse_err(1, "no data rows".into()));
    }
    let series: Vec<TomographySeries> = groups
        .into_iter()
        .map(|((control, basis), (durations_ns, values))| TomographySeries {
            control,
            basis,
            durations_ns,
            values,
            shots,
        })
        .collect();
    for s in &series {
        s.validate()
            .map_err(|e| parse_err(0, format!("series {}/{}: {e}", s.control, s.basis)))?;
    }
    Ok(series)
}
