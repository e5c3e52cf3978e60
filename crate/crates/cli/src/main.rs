mod commands;
mod config;
mod error;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;

use commands::Command;
use config::{ExperimentConfig, Resolved};
use error::CliError;

/// Small-noise experiments for neutral stochastic delay equations.
#[derive(Debug, Parser)]
#[command(name = "sdde", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML experiment config; every field has a default.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads for ensembles; results do not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Overrides `mc.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

fn load(cli: &Cli) -> Result<(Resolved, PathBuf), CliError> {
    let (mut config, base) = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::Validation(format!("cannot read {}: {e}", path.display()))
            })?;
            let base = path.parent().unwrap_or(Path::new("")).to_path_buf();
            (ExperimentConfig::from_toml(&text)?, base)
        }
        None => (ExperimentConfig::default(), PathBuf::new()),
    };
    if let Some(seed) = cli.seed {
        config.mc.seed = seed;
    }
    Ok((Resolved::new(config, &base)?, base))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = load(&cli).and_then(|(resolved, base)| {
        commands::run(cli.command, &resolved, &base, &cli.out, cli.workers)
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("sdde {}: {e}", cli.command.name());
            ExitCode::from(e.exit_code())
        }
    }
}
