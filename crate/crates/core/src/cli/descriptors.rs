use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use pulsepqc::cr::{Calibration, EntanglerKind};
use pulsepqc::descriptors::{
    expressibility, linear_fit, mean_entropy, metric_rows_to_csv, variance_scan, Bipartition, CostKind, DepthRule,
    MetricRow, DEFAULT_EXPR_BINS, DEFAULT_EXPR_SAMPLES,
};
use pulsepqc::pqc::{PqcConfig, PqcSpec, RotationSet};

use super::{parse_kinds, CliResult, Inputs, IntRange, Run};

/// Ansatz options shared by the descriptor commands.
#[derive(Debug, Args, Serialize)]
pub struct AnsatzArgs {
    /// Comma-separated entanglers: cnot, cr-ang, cr-dur.
    #[arg(long, default_value = "cnot,cr-ang,cr-dur")]
    pub entangler: String,
    /// Rotation set: ry or ryrz.
    #[arg(long, default_value = "ry")]
    pub rotations: RotationSet,
    /// Calibration file for the CR entanglers (default: bundled device average).
    #[arg(long, env = super::CALIBRATION_ENV)]
    pub calibration: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

impl AnsatzArgs {
    fn load(&self, inputs: &mut Inputs) -> CliResult<Option<Calibration>> {
        match &self.calibration {
            Some(p) => Ok(Some(inputs.calibration(Some(p))?)),
            None => Ok(None),
        }
    }

    fn labels(&self) -> Vec<&str> {
        self.entangler.split(',').map(str::trim).collect()
    }

    fn spec(&self, label: &str, n: usize, layers: usize, cal: Option<&Calibration>) -> CliResult<PqcSpec> {
        let cfg = PqcConfig {
            n,
            layers,
            rotations: self.rotations,
            entangler: label.to_string(),
            calibration: None,
            angle: None,
            duration_ns: None,
        };
        Ok(cfg.to_spec_with(cal)?)
    }
}

#[derive(Debug, Args, Serialize)]
pub struct ExprArgs {
    #[arg(long)]
    pub qubits: usize,
    /// Layer range, e.g. `1..6` (inclusive) or `3`.
    #[arg(long, alias = "layer-range", default_value = "1..6")]
    pub layers: IntRange,
    #[arg(long, default_value_t = DEFAULT_EXPR_SAMPLES)]
    pub samples: usize,
    #[arg(long, default_value_t = DEFAULT_EXPR_BINS)]
    pub bins: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub ansatz: AnsatzArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct EntropyArgs {
    #[arg(long)]
    pub qubits: usize,
    #[arg(long, alias = "layer-range", default_value = "1..8")]
    pub layers: IntRange,
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    /// Qubits on the kept side of the cut (default: (n-1)/2, i.e. 4 of 9).
    #[arg(long)]
    pub keep: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub ansatz: AnsatzArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct VarianceArgs {
    /// Qubit range, e.g. `2..8`.
    #[arg(long, default_value = "2..8")]
    pub qubits: IntRange,
    /// `shallow` (L = ceil(log2 n)) or `deep` (L = 10n).
    #[arg(long, default_value = "deep")]
    pub depth: DepthRule,
    /// `global` or `local:N_C`.
    #[arg(long, default_value = "global")]
    pub cost: CostKind,
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub ansatz: AnsatzArgs,
}

#[derive(Serialize)]
struct ScanSummary<'a> {
    metric: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    kept_qubits: Option<Vec<usize>>,
    rows: &'a [MetricRow],
}

fn row(kind: &str, n: usize, layers: usize, metric: &str, value: f64, samples: usize, seed: u64) -> MetricRow {
    MetricRow {
        kind: kind.to_string(),
        n,
        layers,
        metric: metric.to_string(),
        value,
        samples,
        seed,
    }
}

fn write_rows(out: &Run, summary: &impl Serialize, rows: &[MetricRow]) -> CliResult<()> {
    out.write("metrics.csv", &metric_rows_to_csv(rows)?)?;
    out.write_json("summary.json", summary)
}

pub fn run_expr(args: ExprArgs) -> CliResult<()> {
    const METRIC: &str = "expr_kl_nats";
    let mut inputs = Inputs::default();
    let a = &args.ansatz;
    let cal = a.load(&mut inputs)?;
    let mut rows = Vec::new();
    for label in a.labels() {
        for l in args.layers.iter() {
            let spec = a.spec(label, args.qubits, l, cal.as_ref())?;
            let r = expressibility(&spec, args.samples, args.bins, a.seed)?;
            rows.push(row(label, args.qubits, l, METRIC, r.expr, args.samples, a.seed));
        }
    }
    let out = Run::start(&a.out)?;
    write_rows(&out, &ScanSummary { metric: METRIC, kept_qubits: None, rows: &rows }, &rows)?;
    out.finish("expr", &args, Some(a.seed), &inputs)
}

pub fn run_entropy(args: EntropyArgs) -> CliResult<()> {
    const METRIC: &str = "entropy_bits";
    let mut inputs = Inputs::default();
    let a = &args.ansatz;
    let split = match args.keep {
        Some(k) => Bipartition::new(args.qubits, k)?,
        None => Bipartition::default_for(args.qubits)?,
    };
    let cal = a.load(&mut inputs)?;
    let mut rows = Vec::new();
    for label in a.labels() {
        for l in args.layers.iter() {
            let spec = a.spec(label, args.qubits, l, cal.as_ref())?;
            let s = mean_entropy(&spec, split, args.samples, a.seed)?;
            rows.push(row(label, args.qubits, l, METRIC, s, args.samples, a.seed));
        }
    }
    let out = Run::start(&a.out)?;
    let summary = ScanSummary {
        metric: METRIC,
        kept_qubits: Some(split.kept_qubits()),
        rows: &rows,
    };
    write_rows(&out, &summary, &rows)?;
    out.finish("entropy", &args, Some(a.seed), &inputs)
}

#[derive(Serialize)]
struct VarianceFit {
    kind: String,
    /// Slope of ln(variance) against n.
    slope: f64,
    intercept: f64,
    r2: f64,
}

#[derive(Serialize)]
struct VarianceSummary<'a> {
    metric: &'a str,
    depth: &'a str,
    cost: String,
    fits: Vec<VarianceFit>,
    rows: &'a [MetricRow],
}

pub fn run_variance(args: VarianceArgs) -> CliResult<()> {
    let mut inputs = Inputs::default();
    let a = &args.ansatz;
    let cal = a.load(&mut inputs)?;
    let shared = cal
        .as_ref()
        .map(|c| c.average_coefficients())
        .unwrap_or_else(pulsepqc::cr::CrCoefficients::device_average);
    let kinds: Vec<EntanglerKind> = parse_kinds(&a.entangler, shared, None, None)?;
    let scan = variance_scan(
        &kinds,
        args.qubits.iter(),
        args.depth,
        a.rotations,
        args.cost,
        args.samples,
        a.seed,
    )?;

    let mut rows = Vec::new();
    for r in &scan.rows {
        rows.push(row(&r.kind, r.n_qubits, r.n_layers, "grad_variance", r.variance, r.n_samples, a.seed));
        rows.push(row(&r.kind, r.n_qubits, r.n_layers, "grad_variance_se", r.std_error, r.n_samples, a.seed));
    }
    let fits = kinds
        .iter()
        .filter_map(|k| {
            let (xs, ys): (Vec<f64>, Vec<f64>) = scan
                .rows
                .iter()
                .filter(|r| r.kind == k.label() && r.variance > 0.0)
                .map(|r| (r.n_qubits as f64, r.variance.ln()))
                .unzip();
            (xs.len() >= 2).then(|| {
                let (slope, intercept, r2) = linear_fit(&xs, &ys);
                VarianceFit {
                    kind: k.label().to_string(),
                    slope,
                    intercept,
                    r2,
                }
            })
        })
        .collect();

    let out = Run::start(&a.out)?;
    let summary = VarianceSummary {
        metric: "grad_variance",
        depth: args.depth.label(),
        cost: args.cost.label(),
        fits,
        rows: &rows,
    };
    write_rows(&out, &summary, &rows)?;
    out.finish("variance", &args, Some(a.seed), &inputs)
}
