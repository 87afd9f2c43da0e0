// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod output;

use config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] floquet_sb::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use floquet_sb::Error as E;
        match self {
            CliError::Config(_) | CliError::Core(E::Domain(_) | E::Parameter(_)) => 2,
            CliError::Core(E::Numerical { .. } | E::Resolution(_)) => 3,
            CliError::Core(E::Truncation { .. }) => 4,
            CliError::Io(_) | CliError::Csv(_) => 1,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "floquet-sb",
    version,
    about = "Driven spin-boson dynamics from the first-order high-frequency expansion"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Lab-frame <σz> at two drive ratios.
    Fig1b(RunArgs),
    /// Upper envelope of lab-frame <σz> over a ratio grid.
    Fig1c(RunArgs),
    /// Rotating-frame <σz> for several drive frequencies.
    Fig1d(RunArgs),
    /// Stroboscopic simulation against the driven oracle (two CSVs).
    Fig2(RunArgs),
    /// Generic run with configurable columns.
    Simulate(RunArgs),
}

#[derive(clap::Args)]
struct RunArgs {
    /// key = value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides of config keys, as `--key value`.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "--KEY VALUE")]
    overrides: Vec<String>,
}

impl RunArgs {
    /// Config and output path. `--config`/`--out` given after the first
    /// override land in the override list and are picked out here.
    fn resolve(&self) -> Result<(RunConfig, PathBuf), CliError> {
        let mut config = self.config.clone();
        let mut out = self.out.clone();
        let mut rest = Vec::new();
        let mut it = self.overrides.iter();
        while let Some(a) = it.next() {
            let slot = match a.as_str() {
                "--config" => &mut config,
                "--out" => &mut out,
                _ => {
                    rest.push(a.clone());
                    continue;
                }
            };
            let v = it
                .next()
                .ok_or_else(|| CliError::Config(format!("{a} is missing a value")))?;
            *slot = Some(PathBuf::from(v));
        }
        let mut cfg = match &config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        cfg.apply_overrides(&rest)?;
        let out = out.ok_or_else(|| CliError::Config("--out is required".into()))?;
        Ok((cfg, out))
    }
}

fn configure_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("FLOQUET_SB_THREADS") {
        let n: usize = v
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Config(format!("FLOQUET_SB_THREADS must be a positive integer, got {v:?}")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot size thread pool: {e}")))?;
    }
    Ok(())
}

type CommandFn = fn(&RunConfig, &std::path::Path) -> Result<(), CliError>;

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    let (args, f): (&RunArgs, CommandFn) = match &cli.command {
        Command::Fig1b(a) => (a, commands::fig1b),
        Command::Fig1c(a) => (a, commands::fig1c),
        Command::Fig1d(a) => (a, commands::fig1d),
        Command::Fig2(a) => (a, commands::fig2),
        Command::Simulate(a) => (a, commands::simulate),
    };
    let (cfg, out) = args.resolve()?;
    f(&cfg, &out)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("floquet-sb: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
