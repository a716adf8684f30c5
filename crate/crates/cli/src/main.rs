//! Command-line front end for the multicell massive-MIMO uplink simulator.
//!
//! Four subcommands cover the workflow end to end: `sweep` evaluates
//! closed-form achievable rates over array sizes and hardware profiles
//! (optionally cross-checked by simulation), `verify` compares the closed
//! form against the Monte Carlo oracle moment by moment, `power` maps the
//! hardware-quality exponents to circuit power budgets, and `scaling`
//! tabulates which exponent triples keep the rate from collapsing as the
//! array grows.
//!
//! Runs are reproducible: the master seed fixes every random draw, each run
//! writes a resolved `manifest.toml` that replays the run byte-for-byte via
//! `--config`, and output does not depend on the worker-pool size.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use mimo_hw::Oscillator;

use crate::config::HardwareKind;
use crate::error::CliError;

#[derive(Parser)]
#[command(
    name = "mimo-hw",
    version,
    about = "Multicell massive-MIMO uplink rates under hardware imperfections"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment description (TOML); omitted keys take the built-in defaults
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Master seed, overriding the config file
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory, overriding the config file
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Oscillator architecture(s) to evaluate
    #[arg(long, global = true, value_enum)]
    mode: Option<ModeArg>,

    /// Hardware profile(s) to evaluate
    #[arg(long, global = true, value_enum)]
    hardware: Option<HardwareArg>,

    /// Monte Carlo realizations; enables the simulation cross-check
    #[arg(long, global = true, value_name = "R")]
    mc: Option<usize>,

    /// Worker threads (default: all cores); results do not depend on this
    #[arg(long, global = true, value_name = "COUNT")]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep closed-form sum rates over array sizes and hardware profiles
    Sweep,
    /// Cross-check closed-form moments and SINR against simulation
    Verify,
    /// Tabulate circuit power budgets per component over array sizes
    Power,
    /// Tabulate which imperfection-growth exponents preserve the rate
    Scaling,
}

#[derive(Copy, Clone, ValueEnum)]
enum ModeArg {
    /// One oscillator shared by all antennas
    Clo,
    /// One oscillator per antenna
    Slo,
    /// Both architectures
    Both,
}

#[derive(Copy, Clone, ValueEnum)]
enum HardwareArg {
    Ideal,
    Fixed,
    Scaled,
    All,
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::FAILURE
        }
    }
}

fn run() -> Result<(), CliError> {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot size the worker pool: {e}")))?;
    }
    let (mut exp, warnings) = config::load(cli.config.as_deref())?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    if let Some(seed) = cli.seed {
        exp.seed = seed;
    }
    if let Some(out) = cli.out {
        exp.out_dir = out;
    }
    if let Some(mode) = cli.mode {
        exp.oscillators = match mode {
            ModeArg::Clo => vec![Oscillator::Common],
            ModeArg::Slo => vec![Oscillator::Separate],
            ModeArg::Both => vec![Oscillator::Common, Oscillator::Separate],
        };
    }
    if let Some(hardware) = cli.hardware {
        exp.hardware = match hardware {
            HardwareArg::Ideal => vec![HardwareKind::Ideal],
            HardwareArg::Fixed => vec![HardwareKind::Fixed],
            HardwareArg::Scaled => vec![HardwareKind::Scaled],
            HardwareArg::All => {
                vec![HardwareKind::Ideal, HardwareKind::Fixed, HardwareKind::Scaled]
            }
        };
    }
    if let Some(mc) = cli.mc {
        exp.mc_blocks = mc;
    }
    match cli.command {
        Command::Sweep => commands::run_sweep(&exp),
        Command::Verify => commands::run_verify(&exp),
        Command::Power => commands::run_power(&exp),
        Command::Scaling => commands::run_scaling(&exp),
    }
}
