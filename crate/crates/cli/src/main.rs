//! `cglp` command-line front-end.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{ExperimentConfig, Overrides};

#[derive(Debug, Parser)]
#[command(name = "cglp", version, about = "Reset-control loop analysis, simulation and sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment config (TOML). Defaults to the "paper" preset.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Preset to use when no config is given: paper, paper-CL or paper-CNL.
    #[arg(long, global = true, value_name = "NAME", conflicts_with = "config")]
    preset: Option<String>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Seed for noise generation and sweeps.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Frequency grid size (omega_x grid size for `sweep`).
    #[arg(long, global = true, value_name = "INT")]
    grid_points: Option<usize>,
    /// Harmonic orders, comma separated.
    #[arg(long, global = true, value_name = "LIST", value_delimiter = ',')]
    harmonics: Option<Vec<u32>>,
    /// Also run the invariant suite on the configured loops.
    #[arg(long, global = true)]
    validate: bool,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Open-loop HOSIDF curves.
    Hosidf,
    /// Higher-order sensitivity curves and their factors.
    Sensitivity,
    /// Time-domain simulation with CPSD and harmonic tables.
    Simulate,
    /// omega_x sweep of steady-state error RMS.
    Sweep,
    /// Invariant suite only.
    Validate,
}

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Numerical(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "validation error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<cglp::Error> for CliError {
    fn from(e: cglp::Error) -> Self {
        match e {
            cglp::Error::InvalidParameter(_) | cglp::Error::Io(_) | cglp::Error::InsufficientData(_) => {
                CliError::Validation(e.to_string())
            }
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

fn run(cli: &Cli) -> Result<bool, CliError> {
    let cfg = match (&cli.config, &cli.preset) {
        (Some(path), _) => ExperimentConfig::load(path)?,
        (None, Some(name)) => ExperimentConfig::preset(name),
        (None, None) => ExperimentConfig::preset("paper"),
    };
    let exp = cfg.resolve(&Overrides {
        seed: cli.seed,
        grid_points: cli.grid_points,
        harmonics: cli.harmonics.clone(),
        out: cli.out.clone(),
    })?;
    let mut out = commands::Output::open(&exp)?;
    let mut ok = true;
    match cli.command {
        Command::Hosidf => commands::hosidf(&exp, &mut out)?,
        Command::Sensitivity => commands::sensitivity(&exp, &mut out)?,
        Command::Simulate => commands::simulate(&exp, &mut out)?,
        Command::Sweep => commands::sweep(&exp, &mut out)?,
        Command::Validate => ok = commands::validate(&exp, &mut out)?,
    }
    if cli.validate && !matches!(cli.command, Command::Validate) {
        ok = commands::validate(&exp, &mut out)?;
    }
    for p in &out.written {
        println!("wrote {}", p.display());
    }
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("validation failed: one or more invariant checks did not pass");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
