use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::Serialize;

use pulsepqc::pqc::{PqcConfig, RotationSet};
use pulsepqc::sim::{exact_minimum_eigenvalue, PauliSum};
use pulsepqc::vqe::{
    brute_force_maxcut, fixtures, maxcut_hamiltonian, score_solutions, vqe_run, MaxCutProblem, SpsaConfig, VqeSummary,
};

use super::{CliError, CliResult, Inputs, Run};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Problem {
    Maxcut,
    Hamiltonian,
}

#[derive(Debug, Args, Serialize)]
pub struct VqeArgs {
    #[arg(long, value_enum)]
    pub problem: Problem,
    /// Edge-list file, or `builtin:k3`, `builtin:ring5`, `builtin:near_cubic9`.
    #[arg(long, required_if_eq("problem", "maxcut"))]
    pub graph: Option<String>,
    /// Pauli-sum file, or `builtin:h2`.
    #[arg(long, required_if_eq("problem", "hamiltonian"))]
    pub ham: Option<String>,
    /// cnot, cr-ang or cr-dur.
    #[arg(long, default_value = "cnot")]
    pub entangler: String,
    #[arg(long, default_value_t = 5)]
    pub layers: usize,
    #[arg(long, default_value = "ry")]
    pub rotations: RotationSet,
    /// SPSA iterations (2 evaluations each).
    #[arg(long, default_value_t = 100)]
    pub iters: usize,
    /// Shots per Pauli term (0 = exact expectations).
    #[arg(long, default_value_t = 0)]
    pub shots: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 5)]
    pub top_k: usize,
    #[arg(long, env = super::CALIBRATION_ENV)]
    pub calibration: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

fn builtin(name: &str) -> Option<&'static str> {
    match name {
        "k3" => Some(fixtures::K3),
        "ring5" => Some(fixtures::RING5),
        "near_cubic9" => Some(fixtures::NEAR_CUBIC9),
        "h2" => Some(fixtures::H2_STO3G_072),
        _ => None,
    }
}

/// File contents, or a bundled fixture for `builtin:NAME`.
fn read_source(inputs: &mut Inputs, source: &str) -> CliResult<String> {
    match source.strip_prefix("builtin:") {
        Some(name) => {
            let text = builtin(name).ok_or_else(|| CliError::Input(format!("unknown builtin fixture {name:?}")))?;
            inputs.record(source, text);
            Ok(text.to_string())
        }
        None => inputs.read(Path::new(source)),
    }
}

pub fn run(args: VqeArgs) -> CliResult<()> {
    let mut inputs = Inputs::default();
    let (h, maxcut) = match args.problem {
        Problem::Maxcut => {
            let src = args.graph.as_deref().ok_or_else(|| CliError::Input("--graph is required".into()))?;
            let problem = MaxCutProblem::parse(&read_source(&mut inputs, src)?, src)?;
            (maxcut_hamiltonian(&problem)?, Some(problem))
        }
        Problem::Hamiltonian => {
            let src = args.ham.as_deref().ok_or_else(|| CliError::Input("--ham is required".into()))?;
            (PauliSum::parse(&read_source(&mut inputs, src)?, src)?, None)
        }
    };
    let cal = match &args.calibration {
        Some(p) => Some(inputs.calibration(Some(p))?),
        None => None,
    };
    let spec = PqcConfig {
        n: h.n_qubits(),
        layers: args.layers,
        rotations: args.rotations,
        entangler: args.entangler.clone(),
        calibration: None,
        angle: None,
        duration_ns: None,
    }
    .to_spec_with(cal.as_ref())?;
    let cfg = SpsaConfig {
        max_iterations: args.iters,
        ..SpsaConfig::with_seed(args.seed)
    };
    cfg.validate()?;
    if args.top_k == 0 {
        return Err(CliError::Input("--top-k must be >= 1".into()));
    }

    let result = vqe_run(&spec, &h, &cfg, args.shots)?;
    let (exact_reference, ranking) = match &maxcut {
        Some(problem) => {
            let solution = brute_force_maxcut(problem)?;
            let ranking = score_solutions(&result.best_state, args.top_k, &solution.optimal)?;
            (-solution.value, Some(ranking))
        }
        None => (exact_minimum_eigenvalue(&h)?.0, None),
    };
    let trace = &result.trace;
    let summary = VqeSummary {
        best_value: trace.best_value,
        best_params: trace.best_params.clone(),
        exact_reference,
        n_evaluations: trace.n_evaluations(),
        gain: trace.gain,
        roca: ranking.as_ref().map(|r| r.roca),
        correct_count: ranking.as_ref().map(|r| r.correct_count),
        top_k: ranking.map(|r| r.top_k),
    };

    let out = Run::start(&args.out)?;
    out.write("trace.csv", &trace.to_csv()?)?;
    out.write_json("summary.json", &summary)?;
    out.finish("vqe", &args, Some(args.seed), &inputs)
}
