//! `bz` — configuration-driven experiments on the BZ reaction-diffusion
//! system. All output goes to files; exit code 0 means every gated check
//! passed, 1 a verification or runtime failure, 2 a usage or config error.

mod commands;
mod config;

use clap::{Parser, Subcommand};
use commands::{RunContext, RunError};
use config::Config;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "bz", version, about = "Keener-Tyson BZ reaction-diffusion toolkit")]
struct Cli {
    /// Path to the TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (overrides the config's output_dir).
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Suppress progress output.
    #[arg(long, global = true, default_value_t = false)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Roots, steady states, invariant squares and solver constants.
    Analyze,
    /// Run one solver from configured initial data and export artifacts.
    Simulate,
    /// Propagator estimates, invariance experiments and instability probe.
    Verify,
    /// Comparison-ODE thresholds and trap times over a parameter grid.
    TrapTime,
    /// Excitability sweep in 2-D with a spatial-nonuniformity index.
    Sweep,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Analyze => "analyze",
            Command::Simulate => "simulate",
            Command::Verify => "verify",
            Command::TrapTime => "trap-time",
            Command::Sweep => "sweep",
        }
    }
}

fn load_config(cli: &Cli) -> Result<Config, RunError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| RunError::Usage("--config PATH is required".to_string()))?;
    let text = std::fs::read_to_string(path).map_err(|e| {
        RunError::Usage(format!("cannot read config file {}: {e}", path.display()))
    })?;
    let mut config: Config = toml::from_str(&text)
        .map_err(|e| RunError::Usage(format!("config file {}: {e}", path.display())))?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = cli.command.name();
    let result = load_config(&cli).and_then(|config| {
        let out_dir = cli
            .output
            .clone()
            .or_else(|| config.output_dir.as_ref().map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("runs").join(command));
        let ctx = RunContext { config, out_dir, quiet: cli.quiet, command };
        commands::run(command, &ctx)
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("bz {command}: verification failed");
            ExitCode::from(1)
        }
        Err(RunError::Usage(msg)) => {
            eprintln!("bz {command}: {msg}");
            ExitCode::from(2)
        }
        Err(RunError::Failure(msg)) => {
            eprintln!("bz {command}: {msg}");
            ExitCode::from(1)
        }
    }
}
