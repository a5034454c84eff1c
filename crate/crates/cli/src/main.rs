use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use crossforge::experiment::{self, ExperimentConfig, ExperimentMode};
use crossforge::Error;

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_INTERNAL: u8 = 3;

#[derive(Parser)]
#[command(name = "crossforge", version, about = "Reinforcement-learned categorical feature crossing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// One of hrc, hrc_star, hrc_hash, hrc_bang, raw.
        #[arg(long)]
        mode: Option<ExperimentMode>,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory for the run artifacts.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rebuild a recipe's features on a CSV file and write their hashed ids.
    Apply {
        #[arg(long)]
        recipe: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Summarise a step log into per-episode convergence rows.
    Convergence {
        #[arg(long)]
        steps: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(config: PathBuf, mode: Option<ExperimentMode>, seed: Option<u64>, out: Option<PathBuf>) -> Result<()> {
    let mut cfg = ExperimentConfig::load(&config)?;
    if let Some(mode) = mode {
        cfg.mode = mode;
    }
    if let Some(seed) = seed {
        cfg.run.seed = seed;
    }
    if let Some(out) = out {
        cfg.out = out;
    }
    let artifacts = experiment::run_experiment(&cfg).with_context(|| format!("experiment {}", config.display()))?;
    let report = &artifacts.report;
    println!("raw accuracy  {:.4}", report.raw.accuracy);
    if let Some(best) = &report.best {
        println!("best accuracy {:.4}", best.accuracy);
        let crosses = report.best_crosses.as_deref().unwrap_or_default();
        println!("best crosses  {}", if crosses.is_empty() { "(none)".to_string() } else { crosses.join(", ") });
    }
    println!("artifacts in  {}", cfg.out.display());
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.chain().find_map(|e| e.downcast_ref::<Error>()) {
        Some(Error::Argument(_)) => EXIT_USAGE,
        Some(Error::Invariant(_)) => EXIT_INTERNAL,
        Some(_) => EXIT_DATA,
        None => EXIT_INTERNAL,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Run { config, mode, seed, out } => run(config, mode, seed, out),
        Command::Apply { recipe, data, out } => experiment::apply_files(&recipe, &data, &out).map_err(Into::into),
        Command::Convergence { steps, out } => experiment::emit_convergence(&steps, &out).map_err(Into::into),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
