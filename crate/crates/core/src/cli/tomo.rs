use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use pulsepqc::cr::CrCoefficients;
use pulsepqc::tomography::{
    duration_grid, fit_cr_coefficients, fit_zi, series_from_csv, series_to_csv, simulate_ht, simulate_ramsey_zi,
    ControlState, FitResult, ZiFit, DEFAULT_GRID_POINTS, DEFAULT_T_MAX_NS,
};

use super::{CliError, CliResult, Inputs, Run};

#[derive(Debug, Args, Serialize)]
pub struct TomoArgs {
    /// Calibration file whose coefficients drive the synthetic data.
    #[arg(long, env = super::CALIBRATION_ENV, conflicts_with = "series")]
    pub calibration: Option<PathBuf>,
    /// Use the bundled calibration (ignores --calibration and the environment).
    #[arg(long, conflicts_with = "series")]
    pub synthetic: bool,
    /// Fit a measured series CSV (`duration_ns,control_state,basis,value`) instead of simulating.
    #[arg(long)]
    pub series: Option<PathBuf>,
    /// Calibration pair `CONTROL,TARGET` to simulate; default is the average over all pairs.
    #[arg(long, value_parser = parse_pair)]
    pub pair: Option<(usize, usize)>,
    /// Number of evenly spaced durations.
    #[arg(long, default_value_t = DEFAULT_GRID_POINTS)]
    pub durations: usize,
    /// Longest duration in ns.
    #[arg(long, default_value_t = DEFAULT_T_MAX_NS)]
    pub t_max: f64,
    /// Shots per point (0 = exact expectations).
    #[arg(long, default_value_t = 0)]
    pub shots: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_pair(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected CONTROL,TARGET, got {s:?}"))?;
    let parse = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("bad qubit index {t:?}"));
    Ok((parse(a)?, parse(b)?))
}

#[derive(Serialize)]
struct TomoReport {
    /// Coefficients used to generate the data, when simulated.
    #[serde(skip_serializing_if = "Option::is_none")]
    truth: Option<CrCoefficients>,
    /// In-plane fit with `zi` from the Ramsey fit.
    coefficients: CrCoefficients,
    converged: bool,
    fit: FitResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    zi: Option<ZiFit>,
}

pub fn run(args: TomoArgs) -> CliResult<()> {
    let mut inputs = Inputs::default();
    let (series, truth) = match &args.series {
        Some(path) => {
            let text = inputs.read(path)?;
            (series_from_csv(&text, &path.display().to_string(), args.shots)?, None)
        }
        None => {
            let path = if args.synthetic { None } else { args.calibration.as_deref() };
            let cal = inputs.calibration(path)?;
            let c = match args.pair {
                Some((ctl, tgt)) => {
                    cal.record_for(ctl, tgt)
                        .ok_or_else(|| CliError::Input(format!("calibration has no record for pair ({ctl}, {tgt})")))?
                        .coefficients
                }
                None => cal.average_coefficients(),
            };
            let grid = duration_grid(args.durations, args.t_max)?;
            let mut series = simulate_ht(&c, &grid, args.shots, args.seed)?;
            series.extend(simulate_ramsey_zi(&c, &grid, args.shots, args.seed)?);
            (series, Some(c))
        }
    };

    let (cr_series, ramsey): (Vec<_>, Vec<_>) =
        series.iter().cloned().partition(|s| s.control != ControlState::Plus);
    let fit = fit_cr_coefficients(&cr_series)?;
    let zi = if ramsey.is_empty() {
        None
    } else {
        Some(fit_zi(&ramsey, Some(&fit.coefficients))?)
    };
    let mut coefficients = fit.coefficients;
    coefficients.zi = zi.map_or(0.0, |z| z.f_zi);
    let converged = fit.converged && zi.is_none_or(|z| z.converged);

    let out = Run::start(&args.out)?;
    out.write("series.csv", &series_to_csv(&series)?)?;
    out.write_json(
        "fit.json",
        &TomoReport {
            truth,
            coefficients,
            converged,
            fit,
            zi,
        },
    )?;
    out.finish("tomo", &args, Some(args.seed), &inputs)?;

    if converged {
        Ok(())
    } else {
        Err(CliError::NotConverged(format!(
            "residual rms {:.3e}{}",
            fit.residual_rms,
            zi.map(|z| format!(", Ramsey residual rms {:.3e}", z.residual_rms)).unwrap_or_default()
        )))
    }
}
