use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod bench;
mod commands;
mod config;

use commands::Reference;

/// Differentially private synthetic data from one pass over a stream.
#[derive(Debug, Parser)]
#[command(name = "privhp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Stream a CSV once and write the private tree.
    Build {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Master seed (falls back to the config file, then PRIVHP_SEED).
        #[arg(long)]
        seed: Option<u64>,
        /// Abort on the first malformed or out-of-domain row.
        #[arg(long)]
        strict: bool,
        /// Disable all noise. The output is NOT private.
        #[arg(long)]
        noiseless: bool,
    },
    /// Sample synthetic rows from a tree file.
    Generate {
        /// Tree file written by `build`.
        #[arg(long)]
        input: PathBuf,
        /// Number of rows.
        #[arg(long, short = 'm')]
        count: usize,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// W1 between a data CSV and a tree or a synthetic CSV, as JSON.
    Evaluate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, conflicts_with = "synthetic", required_unless_present = "synthetic")]
        tree: Option<PathBuf>,
        #[arg(long)]
        synthetic: Option<PathBuf>,
        /// Cell level for the discretized evaluator (d >= 2).
        #[arg(long)]
        level: Option<usize>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Sweep a config grid and write per-trial reports and a summary table.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        noiseless: bool,
    },
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Build { config, input, output, seed, strict, noiseless } => {
            let s = commands::build(&config, &input, &output, seed, strict, noiseless)?;
            println!("items_seen {}", s.items_seen);
            println!("rejected {}", s.rejected);
            println!("malformed {}", s.malformed);
            println!("memory_cells {}", s.memory_cells);
            println!("bytes_read {}", s.bytes_read);
        }
        Command::Generate { input, count, output, seed } => {
            commands::generate(&input, count, seed, output.as_deref())?;
        }
        Command::Evaluate { input, tree, synthetic, level, output } => {
            let reference = match (&tree, &synthetic) {
                (Some(t), _) => Reference::Tree(t),
                (None, Some(s)) => Reference::Synthetic(s),
                (None, None) => unreachable!("clap requires one of --tree/--synthetic"),
            };
            let report = commands::evaluate(&input, reference, level)?;
            commands::write_json(&report, output.as_deref())?;
        }
        Command::Bench { config, output, trials, seed, noiseless } => {
            if noiseless {
                config::warn_non_private();
            }
            let seed = config::resolve_seed(seed)?;
            let s = bench::bench(&config, trials, seed, &output, noiseless)?;
            println!("cells {} reports {} failures {}", s.cells, s.reports, s.failures.len());
            for f in &s.failures {
                eprintln!("cell failed: {f}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
