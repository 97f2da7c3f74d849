//! `repro-bound` command-line front end.
//!
//! Typical session:
//!
//! ```text
//! repro-bound simulate device.json runs/a
//! repro-bound characterize runs/a
//! repro-bound verdict runs/a/characterization.csv --delta-from-observed
//! repro-bound report runs/a
//! ```
//!
//! Exit codes: 0 success, 2 input error, 3 I/O error, 4 incomplete
//! artifacts, 5 tolerance outside the validity regime.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub mod calibration;
pub mod commands;
pub mod config;
pub mod error;
pub mod report;

pub use error::{exit, CliError, CliResult};

pub const THREADS_ENV: &str = "REPRO_BOUND_THREADS";

#[derive(Debug, Parser)]
#[command(name = "repro-bound", version, about = "Reproducibility bounds for noisy Hadamard circuits")]
pub struct Cli {
    /// Override the seed given in the device config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Output location; a directory or a file depending on the command.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Only print errors.
    #[arg(long, short, global = true)]
    pub quiet: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a device config into a run directory.
    Simulate(SimulateArgs),
    /// Estimate per-qubit parameters from a run directory.
    Characterize(CharacterizeArgs),
    /// Test every qubit against a Hellinger tolerance.
    Verdict(VerdictArgs),
    /// Normalize an external calibration snapshot.
    ImportCalibration(ImportArgs),
    /// Shots needed to estimate an outcome probability.
    PlanSamples(PlanArgs),
    /// Emit plot-ready CSV tables for a run directory.
    Report(ReportArgs),
    /// Audit the single-qubit equivalence of the γ test and the distance test.
    LemmaCheck(LemmaArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    pub config: PathBuf,
    /// Run directory; `--out` is used when omitted.
    pub run_dir: Option<PathBuf>,
    /// Per-experiment jitter: fidelity amplitude and θ amplitude in radians.
    #[arg(long, num_args = 2, value_names = ["FIDELITY", "THETA_RAD"])]
    pub drift: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct CharacterizeArgs {
    pub run_dir: PathBuf,
    /// Form γ̂ from all shots at once instead of averaging per experiment.
    #[arg(long)]
    pub pooled: bool,
}

#[derive(Debug, Args)]
pub struct VerdictArgs {
    /// `characterization.csv` or a normalized calibration JSON.
    pub input: PathBuf,
    #[arg(long, conflicts_with = "delta_from_observed", required_unless_present = "delta_from_observed")]
    pub delta: Option<f64>,
    /// Use each qubit's own mean observed distance as its tolerance.
    #[arg(long)]
    pub delta_from_observed: bool,
    /// Register width of the `H^n` circuit.
    #[arg(long, default_value_t = 1)]
    pub n: u32,
    /// θ in radians for qubits that have none.
    #[arg(long, allow_negative_numbers = true)]
    pub theta: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ImportArgs {
    pub snapshot: PathBuf,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    /// Outcome probability to estimate.
    #[arg(long)]
    pub p: f64,
    /// Relative precision.
    #[arg(long)]
    pub precision: f64,
    /// Two-sided confidence level.
    #[arg(long, default_value_t = 0.95)]
    pub confidence: f64,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    pub run_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct LemmaArgs {
    /// Points per axis.
    #[arg(long, default_value_t = 100)]
    pub grid: usize,
}

fn init_logging(quiet: bool) {
    let level = if quiet { "error" } else { "warn" };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .format_target(false)
        .try_init();
}

fn init_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| CliError::Input(format!("{THREADS_ENV}={raw:?} is not a positive integer")))?;
    // a pool built earlier in this process stays in place
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(())
}

/// Parse arguments, run one command and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { exit::INPUT } else { exit::SUCCESS };
        }
    };
    init_logging(cli.quiet);
    match init_threads().and_then(|()| commands::dispatch(&cli)) {
        Ok(()) => exit::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            for line in e.details() {
                eprintln!("  {line}");
            }
            e.exit_code()
        }
    }
}
