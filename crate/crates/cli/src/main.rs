//! Command-line driver.
//!
//! Exit codes: 0 on success, 2 on validation or parse errors, 3 on
//! numerical failures.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use gmi_core::channel::generate_channels_seeded;
use gmi_core::detequiv::{alpha_variance, se_bias_value, slot_equivalents, theta_variance};
use gmi_core::error::{Error, Result};
use gmi_core::experiments::{run_histogram, run_mse_sweep, Sweep};
use gmi_core::io;
use gmi_core::rng::RngStream;

#[derive(Parser)]
#[command(name = "gmi", version, about = "MIMO mutual-information estimation under unknown interference")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate mutual information from channel and observation files.
    Estimate(EstimateArgs),
    /// Deterministic equivalents and asymptotic variances for a channel set.
    Detequiv(DetequivArgs),
    /// Monte Carlo MSE sweep over SIR or slot count.
    SimulateMse(SimulateMseArgs),
    /// Monte Carlo histogram of the normalized G-estimator statistic.
    SimulateHist(SimulateHistArgs),
    /// Generate a channel directory (and optionally observations) from a config.
    Generate(GenerateArgs),
}

#[derive(Args)]
struct EstimateArgs {
    /// Channel directory (H_t.cmat files and manifest; G files not needed).
    #[arg(long)]
    channels: PathBuf,
    /// Observation directory (Y_t.cmat files and manifest).
    #[arg(long)]
    obs: PathBuf,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Report information in bits per antenna instead of nats.
    #[arg(long)]
    bits: bool,
}

#[derive(Args)]
struct DetequivArgs {
    /// Channel directory (needs both H and G files).
    #[arg(long)]
    channels: PathBuf,
    /// Parameter y for the kappa/V/alpha columns.
    #[arg(long, default_value_t = 1.0)]
    y: f64,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepKind {
    Sir,
    T,
}

#[derive(Args)]
struct SimulateMseArgs {
    /// What the sweep varies.
    #[arg(long, value_enum)]
    sweep: SweepKind,
    /// Sweep values: `start:step:stop` or a comma-separated list.
    #[arg(long)]
    values: String,
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateHistArgs {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GenerateArgs {
    /// Experiment config (JSON); the scenario block drives generation.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for the channel files.
    #[arg(long)]
    channels_out: PathBuf,
    /// Optional output directory for one sampled observation block.
    #[arg(long)]
    obs_out: Option<PathBuf>,
    /// Stream id for the observation draw (default 0).
    #[arg(long, default_value_t = 0)]
    obs_stream: u64,
}

fn parse_value_list(spec: &str) -> Result<Vec<f64>> {
    let parse = |s: &str| -> Result<f64> {
        s.trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad sweep value `{s}`")))
    };
    let values = if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::Parse(format!(
                "range `{spec}` must be start:step:stop"
            )));
        }
        let (start, step, stop) = (parse(parts[0])?, parse(parts[1])?, parse(parts[2])?);
        if step <= 0.0 || stop < start {
            return Err(Error::Parse(format!("range `{spec}` must ascend")));
        }
        let count = ((stop - start) / step + 1.5).floor() as usize;
        (0..count).map(|k| start + k as f64 * step).collect()
    } else {
        spec.split(',').map(parse).collect::<Result<Vec<f64>>>()?
    };
    if values.is_empty() {
        return Err(Error::Parse("empty sweep value list".into()));
    }
    Ok(values)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Estimate(args) => {
            let channels = io::import_channels(&args.channels)?;
            let obs = io::import_observations(&args.obs)?;
            let report = gmi_core::estimators::g_estimate(&channels.h, &obs)?;
            io::write_estimate_csv(&args.out, &report, args.bits)?;
            eprintln!(
                "estimate: I_SE = {:.6}, I_G = {:.6} nats/antenna over {} slots -> {}",
                report.i_se,
                report.i_g,
                report.slots.len(),
                args.out.display()
            );
        }
        Command::Detequiv(args) => {
            if args.y <= 0.0 {
                return Err(Error::InvalidInput("--y must be positive".into()));
            }
            let ch = io::import_channels(&args.channels)?.into_channel_set()?;
            let m = ch.scenario.samples_per_slot;
            let slots: Vec<_> = ch
                .slots
                .iter()
                .map(|s| slot_equivalents(&s.hh, &s.gg, args.y, m))
                .collect::<Result<_>>()?;
            let se_bias = se_bias_value(&ch, m, args.y)?;
            let alpha = match alpha_variance(&ch, m, args.y) {
                Ok(v) => Some(v),
                Err(Error::NonPositiveVariance { .. }) => None,
                Err(e) => return Err(e),
            };
            let theta = match theta_variance(&ch, m) {
                Ok(v) => Some(v),
                Err(Error::NonPositiveVariance { .. }) => None,
                Err(e) => return Err(e),
            };
            io::write_detequiv_csv(&args.out, &slots, se_bias, alpha, theta)?;
            eprintln!(
                "detequiv: {} slots at y = {} -> {}",
                slots.len(),
                args.y,
                args.out.display()
            );
        }
        Command::SimulateMse(args) => {
            let mut cfg = io::load_experiment_config(&args.config)?;
            let values = parse_value_list(&args.values)?;
            cfg.sweep = match args.sweep {
                SweepKind::Sir => Sweep::SirDb(values),
                SweepKind::T => {
                    let slots = values
                        .iter()
                        .map(|&v| {
                            if v >= 1.0 && v.fract() == 0.0 {
                                Ok(v as usize)
                            } else {
                                Err(Error::Parse(format!("slot count `{v}` must be a positive integer")))
                            }
                        })
                        .collect::<Result<Vec<usize>>>()?;
                    Sweep::Slots(slots)
                }
            };
            let curve = run_mse_sweep(&cfg)?;
            io::write_mse_csv(&args.out, &curve)?;
            eprintln!(
                "simulate-mse: {} sweep points x {} trials -> {}",
                curve.len(),
                cfg.trials,
                args.out.display()
            );
        }
        Command::SimulateHist(args) => {
            let cfg = io::load_experiment_config(&args.config)?;
            let hist = run_histogram(&cfg)?;
            io::write_histogram_csv(&args.out, &hist)?;
            eprintln!(
                "simulate-hist: {} samples, KS = {:.4} -> {}",
                hist.sample_count,
                hist.ks_statistic,
                args.out.display()
            );
        }
        Command::Generate(args) => {
            let cfg = io::load_experiment_config(&args.config)?;
            let ch = generate_channels_seeded(&cfg.scenario)?;
            io::export_channels(&args.channels_out, &ch)?;
            eprintln!(
                "generate: {} channel slots -> {}",
                ch.slot_count(),
                args.channels_out.display()
            );
            if let Some(obs_dir) = args.obs_out {
                let mut rng = RngStream::new(cfg.master_seed, args.obs_stream);
                let obs = gmi_core::channel::sample_observations(
                    &ch,
                    cfg.scenario.samples_per_slot,
                    &mut rng,
                )?;
                io::export_observations(&obs_dir, &obs)?;
                eprintln!("generate: observations -> {}", obs_dir.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
