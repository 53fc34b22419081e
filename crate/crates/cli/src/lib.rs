//! Command-line front end: configuration files, coefficient presets and the
//! `check`, `solve`, `sweep` and `diagnose` commands.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod preset;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::commands::SweepAxis;
use crate::config::RunConfig;
use crate::error::CliResult;

#[derive(Debug, Parser)]
#[command(
    name = "mfg",
    version,
    about = "Stationary mean-field game solver on the torus"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Path to config.json.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides `output.directory`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Run even if the structural assumptions fail (recorded as a warning).
    #[arg(long)]
    pub no_gates: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the structural assumptions and the coupling gate.
    Check(CommonArgs),
    /// Continue from λ = 0 to λ = 1 and write trace, solution and diagnostics.
    Solve(CommonArgs),
    /// Repeat `solve` over a list of parameter values.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_enum)]
        sweep_axis: SweepAxis,
        /// Comma-separated values.
        #[arg(long, allow_hyphen_values = true)]
        sweep_values: String,
    },
    /// Recompute diagnostics for a stored solution.json.
    Diagnose {
        solution: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
}

fn out_dir(cfg: &RunConfig, common: &CommonArgs) -> PathBuf {
    common
        .out
        .clone()
        .unwrap_or_else(|| cfg.output.directory.clone())
}

fn dispatch(cli: &Cli) -> CliResult<i32> {
    match &cli.command {
        Command::Check(common) => {
            let cfg = RunConfig::load(&common.config)?;
            commands::cmd_check(&cfg)
        }
        Command::Solve(common) => {
            let cfg = RunConfig::load(&common.config)?;
            commands::cmd_solve(&cfg, &out_dir(&cfg, common), common.no_gates).map(|_| 0)
        }
        Command::Sweep {
            common,
            sweep_axis,
            sweep_values,
        } => {
            let values = commands::parse_sweep_values(*sweep_axis, sweep_values)?;
            let cfg = RunConfig::load(&common.config)?;
            commands::cmd_sweep(
                &cfg,
                *sweep_axis,
                &values,
                &out_dir(&cfg, common),
                common.no_gates,
            )
        }
        Command::Diagnose { solution, common } => {
            let cfg = RunConfig::load(&common.config)?;
            commands::cmd_diagnose(&cfg, solution, &out_dir(&cfg, common)).map(|_| 0)
        }
    }
}

/// Runs a parsed command line and returns the process exit status.
pub fn run(cli: &Cli) -> i32 {
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
