//! Command-line front end for the loading library.
//!
//! Exit codes: 0 success, 1 verification failed, 2 configuration error,
//! 3 infeasible instance, 4 I/O error.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use multiload::allocator::{allocate_traced, ber, continuous_allocation, Loading};
use multiload::channel::{generate_rayleigh, realization_seed, ChannelRealization};
use multiload::harness::{
    analytic_table, emit, load_config_file, parse_algorithms, parse_power_budget, parse_snr_grid,
    run_gap_study, run_sweep, write_records, Algorithm, ExperimentSpec, Overrides,
};
use multiload::kkt::check_kkt;
use multiload::LoadingError;

#[derive(Parser)]
#[command(
    name = "multiload",
    version,
    about = "Joint bit and power loading experiments"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` file; flags override its values.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_name = "N")]
    subcarriers: Option<usize>,
    #[arg(long, global = true, value_name = "R")]
    realizations: Option<usize>,
    #[arg(long, global = true, value_name = "S")]
    seed: Option<u64>,
    /// Initial weight alpha0 in (0, 1).
    #[arg(long, global = true, value_name = "A")]
    alpha: Option<f64>,
    #[arg(long, global = true, value_name = "B")]
    ber_th: Option<f64>,
    /// Total power budget in mW, or `none`.
    #[arg(long, global = true, value_name = "MW|none")]
    power_budget: Option<String>,
    #[arg(long, global = true, value_name = "MW")]
    epsilon: Option<f64>,
    #[arg(long, global = true, value_name = "S")]
    power_scale: Option<f64>,
    #[arg(long, global = true, value_name = "TOL")]
    alpha_tol: Option<f64>,
    /// Mean CNR grid in dB: `start:stop:count` or a comma list.
    #[arg(long, global = true, value_name = "GRID")]
    snr_grid: Option<String>,
    /// Single mean CNR point in dB; shorthand for a one-point grid.
    #[arg(long, global = true, value_name = "DB", conflicts_with = "snr_grid")]
    mean_cnr_db: Option<f64>,
    #[arg(long, global = true, value_name = "G")]
    mean_gain: Option<f64>,
    /// Comma list of proposed, continuous, exhaustive, uniform_power, equal_bit, greedy.
    #[arg(long, global = true, value_name = "LIST")]
    algorithms: Option<String>,
    #[arg(long, global = true, value_name = "B")]
    b_max: Option<u32>,
    /// `received` (mean of P C) or `mean-cnr`.
    #[arg(long, global = true, value_name = "AXIS")]
    snr_axis: Option<String>,
    #[arg(long, global = true, value_name = "PATH")]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_name = "csv|json")]
    format: Option<String>,
    /// 100 realizations per point.
    #[arg(long, global = true)]
    fast: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Allocate one realization and print the per-subcarrier result.
    Allocate {
        /// Explicit channel-to-noise ratios (1/mW) instead of a random draw.
        #[arg(long, value_delimiter = ',', value_name = "LIST")]
        cnr: Option<Vec<f64>>,
    },
    /// Average throughput and power over the SNR grid.
    Sweep,
    /// Proposed allocator against the exhaustive oracle.
    Gap,
    /// Proposed allocator against the reconstructed comparators.
    Compare,
    /// Closed-form averages over the SNR grid.
    Analytic,
    /// KKT residuals of the real-valued solution.
    Verify {
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
}

impl Common {
    fn overrides(&self) -> Result<Overrides, LoadingError> {
        let snr_grid = match (&self.snr_grid, self.mean_cnr_db) {
            (Some(g), _) => Some(parse_snr_grid(g)?),
            (None, Some(db)) => Some(vec![db]),
            (None, None) => None,
        };
        Ok(Overrides {
            subcarriers: self.subcarriers,
            realizations: self.realizations,
            seed: self.seed,
            alpha: self.alpha,
            ber_th: self.ber_th,
            power_budget: self
                .power_budget
                .as_deref()
                .map(parse_power_budget)
                .transpose()?,
            epsilon: self.epsilon,
            power_scale: self.power_scale,
            alpha_tol: self.alpha_tol,
            snr_grid,
            mean_gain: self.mean_gain,
            algorithms: self
                .algorithms
                .as_deref()
                .map(parse_algorithms)
                .transpose()?,
            b_max: self.b_max,
            snr_axis: self.snr_axis.as_deref().map(str::parse).transpose()?,
            output: self.output.clone(),
            format: self.format.as_deref().map(str::parse).transpose()?,
            fast: self.fast.then_some(true),
        })
    }
}

/// Command defaults, then the config file, then flags.
fn build_spec(cli: &Cli) -> Result<ExperimentSpec, LoadingError> {
    let mut spec = ExperimentSpec::default();
    match &cli.command {
        Command::Allocate { .. } => {
            spec.n_realizations = 1;
            spec.snr_grid = vec![20.0];
        }
        Command::Verify { .. } => {
            spec.n_realizations = 100;
            spec.snr_grid = vec![20.0];
        }
        Command::Gap => {
            spec.n_subcarriers = 4;
            spec.n_realizations = 100;
            spec.snr_grid = vec![20.0, 30.0, 40.0];
            spec.loading.p_th = Some(0.005);
        }
        Command::Compare => {
            spec.algorithms = vec![
                Algorithm::Proposed,
                Algorithm::UniformPower,
                Algorithm::EqualBit,
                Algorithm::Greedy,
            ];
        }
        Command::Sweep | Command::Analytic => {}
    }
    if let Some(path) = &cli.common.config {
        load_config_file(path)?.apply(&mut spec);
    }
    cli.common.overrides()?.apply(&mut spec);
    spec.validate()?;
    Ok(spec)
}

fn output<T: Serialize>(records: &[T], spec: &ExperimentSpec) -> Result<(), LoadingError> {
    match &spec.output_path {
        Some(path) => emit(records, path, spec.format),
        None => {
            let stdout = std::io::stdout().lock();
            write_records(records, stdout, spec.format).map_err(|source| LoadingError::Io {
                path: PathBuf::from("<stdout>"),
                source,
            })
        }
    }
}

#[derive(Serialize)]
struct SubcarrierRow {
    index: usize,
    cnr: f64,
    bits: u32,
    power_mw: f64,
    ber: f64,
}

fn run_allocate(spec: &ExperimentSpec, cnr: Option<&[f64]>) -> Result<(), LoadingError> {
    let realization = match cnr {
        Some(c) => ChannelRealization::from_cnr(c.to_vec())?,
        None => {
            let model = spec.fading()?;
            let nv = model.noise_variance_for_mean_cnr_db(spec.snr_grid[0]);
            generate_rayleigh(
                spec.n_subcarriers,
                model,
                nv,
                realization_seed(spec.seed, 0),
            )?
        }
    };
    let config = spec.loading.to_config()?;
    let (a, trace) = allocate_traced(&realization, &config)?;
    let rows = a
        .bits()
        .iter()
        .zip(a.powers())
        .enumerate()
        .map(|(i, (&b, &p))| {
            let c = realization.cnr()[i];
            Ok(SubcarrierRow {
                index: i,
                cnr: c,
                bits: b,
                power_mw: p,
                ber: if b > 0 { ber(p, b as f64, c)? } else { 0.0 },
            })
        })
        .collect::<Result<Vec<_>, LoadingError>>()?;
    output(&rows, spec)?;
    eprintln!(
        "total bits {}, total power {:.6e} mW, active {}/{}, alpha used {:.6}, bisection iterations {}",
        a.total_bits_u64(),
        a.total_power(),
        a.active_count(),
        a.len(),
        a.alpha_used().unwrap_or(f64::NAN),
        trace.iterations
    );
    Ok(())
}

fn run_gap(spec: &ExperimentSpec) -> Result<(), LoadingError> {
    let study = run_gap_study(spec)?;
    output(&study.rows, spec)?;
    let s = study.summary;
    eprintln!(
        "mean relative gap {:.6}, max relative gap {:.6}, bound violations {}",
        s.mean_gap, s.max_gap, s.bound_violations
    );
    Ok(())
}

#[derive(Serialize)]
struct KktRow {
    mean_cnr_db: f64,
    realization: usize,
    active: usize,
    min_lambda: Option<f64>,
    max_abs_residual: f64,
    pass: bool,
}

fn run_verify(spec: &ExperimentSpec, tol: f64) -> Result<bool, LoadingError> {
    let config = spec.loading.to_config()?;
    let model = spec.fading()?;
    let alpha = config.effective_alpha(config.alpha0());
    let mut rows = Vec::new();
    for &db in &spec.snr_grid {
        let nv = model.noise_variance_for_mean_cnr_db(db);
        for k in 0..spec.n_realizations {
            let r = generate_rayleigh(
                spec.n_subcarriers,
                model,
                nv,
                realization_seed(spec.seed, k as u64),
            )?;
            let a = continuous_allocation(alpha, &r, config.ber_th())?;
            let report = check_kkt(alpha, &a, &r, config.ber_th(), tol);
            rows.push(KktRow {
                mean_cnr_db: db,
                realization: k,
                active: report.indices.len(),
                min_lambda: report.lambda.iter().copied().reduce(f64::min),
                max_abs_residual: report.max_abs_residual,
                pass: report.pass,
            });
        }
    }
    output(&rows, spec)?;
    let failed = rows.iter().filter(|r| !r.pass).count();
    let worst = rows.iter().map(|r| r.max_abs_residual).fold(0.0, f64::max);
    eprintln!(
        "{} realizations, {failed} failed, max residual {worst:.3e} (tolerance {tol:e})",
        rows.len()
    );
    Ok(failed == 0)
}

fn run(cli: &Cli) -> Result<ExitCode, LoadingError> {
    let spec = build_spec(cli)?;
    match &cli.command {
        Command::Allocate { cnr } => run_allocate(&spec, cnr.as_deref())?,
        Command::Sweep | Command::Compare => output(&run_sweep(&spec)?, &spec)?,
        Command::Gap => run_gap(&spec)?,
        Command::Analytic => output(&analytic_table(&spec)?, &spec)?,
        Command::Verify { tol } => {
            if !run_verify(&spec, *tol)? {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn exit_code(e: &LoadingError) -> u8 {
    match e {
        LoadingError::InvalidArgument(_)
        | LoadingError::Config(_)
        | LoadingError::InstanceTooLarge { .. } => 2,
        LoadingError::Infeasible(_) | LoadingError::BelowThreshold { .. } => 3,
        LoadingError::Io { .. } | LoadingError::Parse { .. } => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("multiload").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn flags_override_command_defaults() {
        let spec = build_spec(&parse(&[
            "gap",
            "--subcarriers",
            "6",
            "--power-budget",
            "none",
        ]))
        .unwrap();
        assert_eq!(spec.n_subcarriers, 6);
        assert_eq!(spec.loading.p_th, None);
        assert_eq!(spec.n_realizations, 100);
    }

    #[test]
    fn fast_and_explicit_realizations() {
        let spec = build_spec(&parse(&["sweep", "--fast"])).unwrap();
        assert_eq!(spec.n_realizations, ExperimentSpec::FAST_REALIZATIONS);
        let spec = build_spec(&parse(&["--fast", "--realizations", "7", "sweep"])).unwrap();
        assert_eq!(spec.n_realizations, 7);
    }

    #[test]
    fn error_classes_map_to_exit_codes() {
        assert_eq!(exit_code(&LoadingError::Config("x".into())), 2);
        assert_eq!(exit_code(&LoadingError::Infeasible("x".into())), 3);
        let io = LoadingError::Io {
            path: "p".into(),
            source: std::io::Error::other("x"),
        };
        assert_eq!(exit_code(&io), 4);
        let e = build_spec(&parse(&["sweep", "--format", "xml"])).unwrap_err();
        assert_eq!(exit_code(&e), 2);
    }
}
