//! `ionqaoa` command-line tool.
//!
//! Exit status: 0 on success, 2 for invalid input or missing prerequisites,
//! 3 for numerical failures (unconverged equilibrium, unstable or resonant
//! modes, non-finite costs), 1 for I/O and anything else.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{FileConfig, Overrides, Settings, UsageError};

#[derive(Parser, Debug)]
#[command(name = "ionqaoa", version, about = "Trapped-ion native QAOA experiments")]
struct Cli {
    /// TOML experiment configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Directory for result files.
    #[arg(long, global = true, env = "IONQAOA_OUTPUT_DIR")]
    output_dir: Option<PathBuf>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(flatten)]
    overrides: Overrides,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Equilibrium, radial modes and coupling base of the ion chain.
    Chain,
    /// Hyperparameter search (A*, alpha*) for each problem instance.
    Heuristic,
    /// Layerwise training of the rescaled ion-native ansatz.
    Train,
    /// Multi-cycle SK benchmark with the standard QAOA comparison.
    Bench,
    /// Expressibility (KL divergence from Haar) of a configuration.
    Express,
    /// Singular-value profile of states from one configuration.
    Svd,
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(config::usage("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global()?;
    }
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let output_dir = cli.output_dir.clone().or(file.output_dir.clone()).unwrap_or_else(|| PathBuf::from("results"));
    let settings = Settings::resolve(&file, &cli.overrides)?;
    let ctx = commands::Context::new(settings, output_dir);
    match cli.command {
        Command::Chain => commands::chain(&ctx),
        Command::Heuristic => commands::heuristic(&ctx),
        Command::Train => commands::train(&ctx),
        Command::Bench => commands::bench(&ctx),
        Command::Express => commands::express(&ctx),
        Command::Svd => commands::svd(&ctx),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<ionqaoa::Error>() {
            if e.is_validation() {
                return 2;
            }
            if e.is_numerical() {
                return 3;
            }
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
