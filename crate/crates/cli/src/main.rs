use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mflab::harness::{self, check_assumptions, CheckStatus, ExperimentConfig, ExperimentKind};

/// Mean-field heavy-ball experiments.
///
/// Exit codes: 0 on success, 1 for configuration or I/O errors (and failed
/// `check` diagnostics), 2 for numerical failures.
#[derive(Parser)]
#[command(name = "mflab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one dynamics and record the pool risk.
    Train(RunArgs),
    /// Coupled SHB, HB, PD and proxy runs with per-time distances.
    Couple(RunArgs),
    /// Coupled runs over widths and step sizes with median rates.
    Chaos(RunArgs),
    /// Dropout error of trained networks over widths.
    DropoutScan(RunArgs),
    /// Risk along a connecting path between two trained networks.
    Connect(RunArgs),
    /// Noisy heavy-ball runs with weight bounds.
    Noisy(RunArgs),
    /// Check the standing assumptions for a config without running it.
    Check(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config's `out_dir`.
    #[arg(long, env = "MFLAB_OUT_DIR")]
    out: Option<PathBuf>,
    /// Replaces the seed list with this single seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    jobs: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match cli.command {
        Command::Train(a) => (Some(ExperimentKind::Train), a),
        Command::Couple(a) => (Some(ExperimentKind::Couple), a),
        Command::Chaos(a) => (Some(ExperimentKind::Chaos), a),
        Command::DropoutScan(a) => (Some(ExperimentKind::DropoutScan), a),
        Command::Connect(a) => (Some(ExperimentKind::Connect), a),
        Command::Noisy(a) => (Some(ExperimentKind::Noisy), a),
        Command::Check(a) => (None, a),
    };
    match execute(kind, args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 2 } else { 1 })
        }
    }
}

fn execute(kind: Option<ExperimentKind>, args: RunArgs) -> mflab::Result<ExitCode> {
    if let Some(jobs) = args.jobs {
        rayon_threads(jobs)?;
    }
    let mut config = ExperimentConfig::from_path(&args.config)?;
    if let Some(seed) = args.seed {
        config = config.with_seed(seed);
    }
    let Some(kind) = kind else {
        let diagnostics = check_assumptions(&config);
        for c in &diagnostics.checks {
            let tag = match c.status {
                CheckStatus::Pass => "pass",
                CheckStatus::Fail => "FAIL",
                CheckStatus::Waived => "waived",
            };
            println!("{tag:>6}  {:<24} {}", c.name, c.message);
        }
        return Ok(if diagnostics.passed() {
            ExitCode::SUCCESS
        } else {
            ExitCode::from(1)
        });
    };
    let config = config.resolve(kind)?;
    if config.is_square_loss() && config.allow_unbounded_loss {
        eprintln!("warning: square loss has an unbounded derivative; the standing assumptions do not hold");
    }
    let out = args
        .out
        .or_else(|| config.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("mflab-out"));
    let paths = harness::run(&config, &out)?;
    println!("wrote {} and {}", paths.csv.display(), paths.summary.display());
    Ok(ExitCode::SUCCESS)
}

fn rayon_threads(jobs: usize) -> mflab::Result<()> {
    if jobs == 0 {
        return Err(mflab::Error::InvalidArgument("--jobs must be at least 1".into()));
    }
    mflab::harness::set_threads(jobs)
}
