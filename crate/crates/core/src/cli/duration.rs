use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use pulsepqc::cr::{CrCoefficients, EntanglerKind};
use pulsepqc::descriptors::{metric_rows_to_csv, MetricRow};
use pulsepqc::pqc::{build_pqc, estimate_duration, DurationProfile, RotationSet};

use super::{CliResult, Inputs, IntRange, Run};

#[derive(Debug, Args, Serialize)]
pub struct DurationArgs {
    #[arg(long, default_value = "3..9")]
    pub qubits: IntRange,
    #[arg(long, default_value_t = 5)]
    pub layers: usize,
    #[arg(long, default_value = "ry")]
    pub rotations: RotationSet,
    /// Gate-time profile JSON (`single_qubit_ns`, `cnot_ns`, `cr_angle_ns`, `cr_duration_ns`).
    #[arg(long)]
    pub profile: Option<PathBuf>,
    /// Derive gate times from a calibration file instead of a profile.
    #[arg(long, env = super::CALIBRATION_ENV, conflicts_with = "profile")]
    pub calibration: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct DurationSummary<'a> {
    profile: DurationProfile,
    rows: &'a [MetricRow],
}

pub fn run(args: DurationArgs) -> CliResult<()> {
    let mut inputs = Inputs::default();
    let profile = match (&args.profile, &args.calibration) {
        (Some(p), _) => {
            inputs.read(p)?;
            DurationProfile::load(p)?
        }
        (None, Some(c)) => DurationProfile::from_calibration(&inputs.calibration(Some(c))?)?,
        (None, None) => DurationProfile::representative(),
    };
    let c = CrCoefficients::device_average();
    let kinds = [EntanglerKind::Cnot, EntanglerKind::cr_angle(c), EntanglerKind::cr_duration(c)];

    let mut rows = Vec::new();
    for n in args.qubits.iter() {
        let mut base = None;
        for kind in &kinds {
            let spec = build_pqc(n, args.layers, args.rotations, *kind)?;
            let t = estimate_duration(&spec, &profile.model_for(kind))?;
            let base_t = *base.get_or_insert(t);
            let mut push = |metric: &str, value: f64| {
                rows.push(MetricRow {
                    kind: kind.label().to_string(),
                    n,
                    layers: args.layers,
                    metric: metric.to_string(),
                    value,
                    samples: 0,
                    seed: 0,
                })
            };
            push("duration_ns", t);
            push("speedup_vs_cnot", base_t / t);
        }
    }

    let out = Run::start(&args.out)?;
    out.write("metrics.csv", &metric_rows_to_csv(&rows)?)?;
    out.write_json("summary.json", &DurationSummary { profile, rows: &rows })?;
    out.finish("duration", &args, None, &inputs)
}
