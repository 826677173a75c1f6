//! `smra`: rate-distortion experiments for incremental coding of Gaussian
//! sources with memory.
//!
//! Subcommands read one JSON experiment config (see `config.rs`); CSV goes
//! to stdout or `--out`, diagnostics go to stderr. Exit codes: 0 ok,
//! 2 config error, 3 numerical error, 4 internal consistency failure,
//! 5 statistical test failure. `SMRA_RD_THREADS` caps worker threads.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use smra_core::covariance::PresetFamily;

#[derive(Parser)]
#[command(name = "smra", version, about = "Storage/transmission rate-distortion toolkit for sequential random access to Gaussian sources")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalue spectra with closed-form and density cross-checks (CSV).
    Spectrum(SpectrumArgs),
    /// Rate-distortion curve sweep (CSV).
    RdCurve(RdCurveArgs),
    /// Monte Carlo validation of the test channel (JSON).
    Simulate(SimulateArgs),
    /// Incremental bitstream layout with verification report (JSON).
    Layout(LayoutArgs),
    /// One-shot sweep of a preset family with its memoryless baseline (CSV).
    ReproduceFig2(Fig2Args),
}

#[derive(Args)]
struct SpectrumArgs {
    #[arg(long)]
    config: PathBuf,
    /// Override the block length from the config.
    #[arg(long)]
    n: Option<usize>,
    /// Write to this path instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RdCurveArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    n: Option<usize>,
    /// Sweep policy override.
    #[arg(long, value_enum)]
    policy: Option<PolicyArg>,
    /// Noise parameter for the fixed-delta policy.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    n: Option<usize>,
    /// Base seed of the deterministic generator.
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo sample count (at least 100).
    #[arg(long)]
    samples: Option<u64>,
    /// Test-channel noise variance.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LayoutArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Fig2Args {
    /// Which preset family to sweep.
    #[arg(value_enum)]
    family: FamilyArg,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum PolicyArg {
    Classical,
    ThetaEqDelta,
    FixedDelta,
}

impl PolicyArg {
    fn name(self) -> &'static str {
        match self {
            PolicyArg::Classical => "classical",
            PolicyArg::ThetaEqDelta => "theta_eq_delta",
            PolicyArg::FixedDelta => "fixed_delta",
        }
    }
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum FamilyArg {
    Nn,
    Markov,
}

impl From<FamilyArg> for PresetFamily {
    fn from(value: FamilyArg) -> Self {
        match value {
            FamilyArg::Nn => PresetFamily::NearestNeighbor,
            FamilyArg::Markov => PresetFamily::FirstOrderMarkov,
        }
    }
}

fn init_thread_pool() {
    if let Ok(raw) = std::env::var("SMRA_RD_THREADS") {
        match raw.parse::<usize>() {
            Ok(threads) if threads >= 1 => {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build_global();
            }
            _ => eprintln!("warning: ignoring invalid SMRA_RD_THREADS={raw:?}"),
        }
    }
}

fn run(cli: Cli) -> error::CliResult<()> {
    match cli.command {
        Command::Spectrum(args) => commands::spectrum::run(&args.config, args.n, args.out.as_ref()),
        Command::RdCurve(args) => commands::rd_curve::run(
            &args.config,
            args.n,
            args.policy.map(PolicyArg::name),
            args.delta,
            args.out.as_ref(),
        ),
        Command::Simulate(args) => commands::simulate::run(
            &args.config,
            args.n,
            args.seed,
            args.samples,
            args.delta,
            args.out.as_ref(),
        ),
        Command::Layout(args) => commands::layout::run(&args.config, args.n, args.out.as_ref()),
        Command::ReproduceFig2(args) => {
            commands::fig2::run(args.family.into(), args.n, args.seed, args.out.as_ref())
        }
    }
}

fn main() {
    init_thread_pool();
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error: {err}");
        std::process::exit(err.code);
    }
}
