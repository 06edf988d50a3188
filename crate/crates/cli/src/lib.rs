//! Command-line driver: simulate, learn, reduce and evaluate the
//! reaction-diffusion benchmark from a flat configuration file.

pub mod commands;
pub mod config;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub use commands::{cmd_evaluate, cmd_learn, cmd_pipeline, cmd_reduce, cmd_simulate};
pub use config::ExperimentConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("I/O error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    fn in_file(self, path: &Path) -> Self {
        match self {
            CliError::Io(m) => CliError::Io(format!("{}: {m}", path.display())),
            other => other,
        }
    }
}

impl From<sigmor::Error> for CliError {
    fn from(e: sigmor::Error) -> Self {
        use sigmor::Error as E;
        match e {
            E::Io(_) | E::Parse { .. } | E::ShapeMismatch { .. } => CliError::Io(e.to_string()),
            E::InvalidArgument(_) | E::DimensionOverflow(_) | E::NonUniformGrid(_) => CliError::Config(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "sigmor", version, about = "Signature surrogates and balanced truncation for a reaction-diffusion benchmark")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Output directory (overrides `out_dir`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Start from the full-scale preset (d = 1000, N = 5, 1000 + 1000 controls).
    #[arg(long, global = true)]
    pub full_scale: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Truth outputs for the test frequencies in `sim_k`.
    Simulate,
    /// Fit the signature readout `C`.
    Learn,
    /// Gramians, balancing, Hankel values and reduced systems.
    Reduce,
    /// Error functionals over `r_list`.
    Evaluate,
    /// All of the above in order.
    Pipeline,
}

/// Resolves the configuration: preset, then file, then `SIGMOR_*` variables, then `--out`.
pub fn resolve_config<I>(cli: &Cli, env: I) -> Result<ExperimentConfig, CliError>
where
    I: IntoIterator<Item = (String, String)>,
{
    let mut cfg = if cli.full_scale { ExperimentConfig::full_scale() } else { ExperimentConfig::default() };
    if let Some(path) = &cli.config {
        cfg.apply_file(path)?;
    }
    cfg.apply_env(env)?;
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = resolve_config(cli, std::env::vars())?;
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    }
    match cli.command {
        Command::Simulate => {
            cmd_simulate(&cfg)?;
        }
        Command::Learn => {
            cmd_learn(&cfg)?;
        }
        Command::Reduce => {
            cmd_reduce(&cfg)?;
        }
        Command::Evaluate => {
            cmd_evaluate(&cfg)?;
        }
        Command::Pipeline => {
            cmd_pipeline(&cfg)?;
        }
    }
    Ok(())
}
