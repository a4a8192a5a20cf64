//! Batch driver for the experiment suites: loads JSON inputs, runs named
//! checks with deterministic seeds, writes `report.json` plus one CSV per
//! sweep.
//!
//! Exit status: 0 when every check passes, 1 on a tolerance violation (the
//! failing invariants are printed), 2 on malformed input (JSON errors are
//! reported with line and column).
//!
//! Verbosity is controlled by the `INVMONO_LOG` environment variable
//! (`error`, `info`, `debug`).

mod config;
mod oracle;
mod report;
mod suites;

use clap::{Parser, Subcommand};
use config::{ExperimentConfig, Suite};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "invmono", version, about = "monotone-extension experiment suites")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, clap::Args)]
struct CommonArgs {
    /// JSON experiment configuration (input file paths, seed, tolerance)
    #[arg(long)]
    config: Option<PathBuf>,
    /// output directory for report.json and CSV sweeps
    #[arg(long)]
    out: Option<PathBuf>,
    /// RNG seed for the sampled checks
    #[arg(long)]
    seed: Option<u64>,
    /// base tolerance for the per-suite checks
    #[arg(long)]
    tol: Option<f64>,
    /// add wall-clock runtime_ms columns to sweep CSVs (breaks byte-for-byte
    /// reproducibility of the output files)
    #[arg(long)]
    timings: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Monotone-graph extension checks (contact, resolvents, confinement)
    ExtendMonotone(CommonArgs),
    /// Lipschitz extension checks (both routes)
    Kirszbraun(CommonArgs),
    /// Bistochastic coupling approximation sweep
    CouplingApprox(CommonArgs),
    /// Resolvent/Yosida/semigroup evolution checks
    Evolve(CommonArgs),
    /// Permutation-invariance and structure audit
    InvarianceAudit(CommonArgs),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("INVMONO_LOG")).init();
    let cli = Cli::parse();
    let (suite, args) = match cli.command {
        Command::ExtendMonotone(a) => (Suite::ExtendMonotone, a),
        Command::Kirszbraun(a) => (Suite::Kirszbraun, a),
        Command::CouplingApprox(a) => (Suite::CouplingApprox, a),
        Command::Evolve(a) => (Suite::Evolve, a),
        Command::InvarianceAudit(a) => (Suite::InvarianceAudit, a),
    };
    let config = match ExperimentConfig::resolve(
        suite,
        args.config.as_deref(),
        args.out,
        args.seed,
        args.tol,
        args.timings,
    ) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match suites::run(&config) {
        Ok(outcome) => {
            if outcome.failed.is_empty() {
                log::info!("all {} checks passed", outcome.total);
                ExitCode::SUCCESS
            } else {
                for name in &outcome.failed {
                    eprintln!("FAILED invariant: {name}");
                }
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
