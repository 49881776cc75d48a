//! Command-line front end. Every command writes into its own output
//! directory together with a `manifest.json`.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use pulsepqc::cr::{Calibration, CrCoefficients};
use pulsepqc::pqc::parse_entangler;
use pulsepqc::cr::{EntanglerKind, DEFAULT_CR_ANGLE, DEFAULT_CR_DURATION_NS};

mod descriptors;
mod duration;
mod tomo;
mod vqe;

pub const CALIBRATION_ENV: &str = "PULSEPQC_CALIBRATION";

#[derive(Debug, Parser)]
#[command(name = "pulsepqc", version, about = "Cross-resonance entanglers, ansatz descriptors and VQE")]
pub struct Cli {
    /// Worker threads for sampling loops (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate or load Hamiltonian-tomography series and fit the CR coefficients.
    Tomo(tomo::TomoArgs),
    /// Expressibility (KL divergence from Haar, nats) versus depth.
    Expr(descriptors::ExprArgs),
    /// Mean bipartite entanglement entropy (bits) versus depth.
    Entropy(descriptors::EntropyArgs),
    /// Cost-gradient variance versus qubit count.
    Variance(descriptors::VarianceArgs),
    /// SPSA-driven VQE on a MaxCut graph or a Pauli-sum Hamiltonian.
    Vqe(vqe::VqeArgs),
    /// Serial-schedule circuit duration and speedup over the CNOT ansatz.
    Duration(duration::DurationArgs),
}

#[derive(Debug)]
pub enum CliError {
    Input(String),
    NotConverged(String),
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::NotConverged(_) => 3,
            CliError::Output(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "{m}"),
            CliError::NotConverged(m) => write!(f, "fit did not converge: {m}"),
            CliError::Output(m) => write!(f, "could not write output: {m}"),
        }
    }
}

impl From<pulsepqc::Error> for CliError {
    fn from(e: pulsepqc::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub fn run(cli: Cli) -> CliResult<()> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Input("--threads must be >= 1".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Input(format!("cannot start thread pool: {e}")))?;
    pool.install(|| match cli.command {
        Command::Tomo(a) => tomo::run(a),
        Command::Expr(a) => descriptors::run_expr(a),
        Command::Entropy(a) => descriptors::run_entropy(a),
        Command::Variance(a) => descriptors::run_variance(a),
        Command::Vqe(a) => vqe::run(a),
        Command::Duration(a) => duration::run(a),
    })
}

/// Inclusive integer range written `a..b`, `a..=b` or `a`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct IntRange {
    pub start: usize,
    pub end: usize,
}

impl IntRange {
    pub fn iter(&self) -> std::ops::RangeInclusive<usize> {
        self.start..=self.end
    }
}

impl FromStr for IntRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parse = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("bad integer {t:?} in range {s:?}"));
        let (start, end) = match s.split_once("..") {
            Some((a, b)) => (parse(a)?, parse(b.strip_prefix('=').unwrap_or(b))?),
            None => {
                let v = parse(s)?;
                (v, v)
            }
        };
        if start > end {
            return Err(format!("empty range {s:?}"));
        }
        Ok(IntRange { start, end })
    }
}

/// Comma-separated entangler labels.
pub fn parse_kinds(
    labels: &str,
    coefficients: CrCoefficients,
    angle: Option<f64>,
    duration_ns: Option<f64>,
) -> CliResult<Vec<EntanglerKind>> {
    labels
        .split(',')
        .map(|l| {
            parse_entangler(
                l.trim(),
                coefficients,
                angle.unwrap_or(DEFAULT_CR_ANGLE),
                duration_ns.unwrap_or(DEFAULT_CR_DURATION_NS),
            )
            .map_err(CliError::from)
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

/// Text inputs read during a run, with their digests.
#[derive(Debug, Default)]
pub struct Inputs {
    digests: Vec<InputDigest>,
}

impl Inputs {
    pub fn record(&mut self, path: &str, text: &str) {
        self.digests.push(InputDigest {
            path: path.to_string(),
            sha256: hex::encode(Sha256::digest(text.as_bytes())),
        });
    }

    pub fn read(&mut self, path: &Path) -> CliResult<String> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        self.record(&path.display().to_string(), &text);
        Ok(text)
    }

    /// Calibration from a file, or the bundled one when `path` is `None`.
    pub fn calibration(&mut self, path: Option<&Path>) -> CliResult<Calibration> {
        match path {
            Some(p) => {
                let text = self.read(p)?;
                let cal = Calibration::from_json(&text).map_err(|e| match e {
                    pulsepqc::Error::Json(j) => CliError::Input(format!("{}: {j}", p.display())),
                    other => other.into(),
                })?;
                Ok(cal)
            }
            None => Ok(Calibration::bundled()),
        }
    }
}

#[derive(Serialize)]
struct Manifest<'a, A: Serialize> {
    command: &'a str,
    args: &'a A,
    seed: Option<u64>,
    version: &'a str,
    inputs: &'a [InputDigest],
    wall_time_s: f64,
}

/// Output directory for one run.
pub struct Run {
    dir: PathBuf,
    started: Instant,
}

impl Run {
    pub fn start(dir: &Path) -> CliResult<Self> {
        fs::create_dir_all(dir).map_err(|e| CliError::Output(format!("{}: {e}", dir.display())))?;
        Ok(Run {
            dir: dir.to_path_buf(),
            started: Instant::now(),
        })
    }

    pub fn write(&self, name: &str, contents: &str) -> CliResult<()> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Output(e.to_string()))?;
        text.push('\n');
        self.write(name, &text)
    }

    pub fn finish<A: Serialize>(self, command: &str, args: &A, seed: Option<u64>, inputs: &Inputs) -> CliResult<()> {
        let manifest = Manifest {
            command,
            args,
            seed,
            version: pulsepqc::VERSION,
            inputs: &inputs.digests,
            wall_time_s: self.started.elapsed().as_secs_f64(),
        };
        self.write_json("manifest.json", &manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!("1..6".parse::<IntRange>().unwrap(), IntRange { start: 1, end: 6 });
        assert_eq!("2..=8".parse::<IntRange>().unwrap(), IntRange { start: 2, end: 8 });
        assert_eq!("9".parse::<IntRange>().unwrap(), IntRange { start: 9, end: 9 });
        assert!("5..2".parse::<IntRange>().is_err());
        assert!("a..2".parse::<IntRange>().is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
