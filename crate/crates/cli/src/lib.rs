//! Command-line driver: quantize networks, run verification suites, and run
//! scaling experiments.
//!
//! Exit codes: 0 success; 1 failed suite or other runtime failure; 2 bad flags,
//! unreadable or malformed input; 3 rank-deficient data in perfect mode.

mod experiment;
mod quantize;
mod verify;

use std::ffi::OsString;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use spfq_core::SpfqError;

pub use experiment::ExperimentKind;
pub use verify::Suite;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RANK_DEFICIENT: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "spfq",
    version,
    about = "Stochastic path-following quantization of MLPs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Quantize a network against a calibration batch.
    Quantize(QuantizeArgs),
    /// Run Monte Carlo and property suites for the error bounds.
    Verify(VerifyArgs),
    /// Run a scaling experiment and emit a CSV table.
    Experiment(ExperimentArgs),
}

/// Bit budget: an integer `b` (so `K = 2^(b-1)`) or `inf` for the unbounded grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bits {
    Infinite,
    Finite(u32),
}

impl FromStr for Bits {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "inf" | "infinite" => Ok(Bits::Infinite),
            _ => match s.parse::<u32>() {
                Ok(b) if (2..=31).contains(&b) => Ok(Bits::Finite(b)),
                _ => Err(format!("expected an integer in 2..=31 or `inf`, got `{s}`")),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Fused,
    Perfect,
    #[value(name = "order-r")]
    OrderR,
}

#[derive(Debug, Args)]
pub struct QuantizeArgs {
    /// Network JSON manifest.
    #[arg(long)]
    pub network: PathBuf,
    /// Calibration data CSV (one sample per row).
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "4")]
    pub bits: Bits,
    /// Step constant `C` in `delta = C/(K N) sum_j |W_j|_inf`.
    #[arg(long, default_value_t = 1.0)]
    pub step_constant: f64,
    /// Fixed step size; required with `--bits inf`.
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long, value_enum, default_value_t = ModeArg::Fused)]
    pub mode: ModeArg,
    /// Alignment order for `--mode order-r`.
    #[arg(long, default_value_t = 1)]
    pub order: usize,
    /// Probability exponent used for the reported bounds.
    #[arg(long, default_value_t = 2)]
    pub p: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output path for the quantized network.
    #[arg(long)]
    pub out: PathBuf,
    /// Output path for the JSON report.
    #[arg(long)]
    pub report: PathBuf,
    /// Record per-layer wall-clock time in the report.
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = Suite::All)]
    pub suite: Suite,
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Where to write the result table.
    #[arg(long)]
    pub csv: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long, value_enum)]
    pub kind: ExperimentKind,
    /// Calibration batch size.
    #[arg(long)]
    pub m: Option<usize>,
    /// Comma-separated widths.
    #[arg(long = "N-list", value_delimiter = ',')]
    pub n_list: Option<Vec<usize>>,
    /// Network depth for `relative-error`.
    #[arg(long = "L", default_value_t = 1)]
    pub layers: usize,
    #[arg(long, default_value_t = 2)]
    pub p: u32,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Step size for `relative-error` and `bit-sizing`.
    #[arg(long, default_value_t = 0.5)]
    pub delta: f64,
    /// Relative perturbation of the previous layer for `bit-sizing`.
    #[arg(long, default_value_t = 0.0)]
    pub epsilon: f64,
    /// Output CSV path; stdout when absent.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

/// Exit code for a library error.
pub fn exit_code(err: &SpfqError) -> i32 {
    if err.is_rank_deficient() {
        EXIT_RANK_DEFICIENT
    } else if err.is_input_error() {
        EXIT_USAGE
    } else {
        EXIT_FAILURE
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("SPFQ_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| format!("SPFQ_THREADS must be a non-negative integer, got `{v}`"))?;
    if n > 0 {
        // A pool may already exist when called twice in one process; keep it.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    Ok(())
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return EXIT_USAGE;
    }
    match cli.command {
        Command::Quantize(a) => quantize::cmd_quantize(&a),
        Command::Verify(a) => verify::cmd_verify(&a),
        Command::Experiment(a) => experiment::cmd_experiment(&a),
    }
}

pub(crate) fn report_error(err: &SpfqError) -> i32 {
    eprintln!("error: {err}");
    exit_code(err)
}

pub(crate) fn usage_error(msg: &str) -> i32 {
    eprintln!("error: {msg}");
    EXIT_USAGE
}
