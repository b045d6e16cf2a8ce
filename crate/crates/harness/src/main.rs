use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use liddi_harness::commands::{run, Command};
use liddi_harness::{load_config_with, HarnessError, Overrides};

#[derive(Parser)]
#[command(
    name = "liddi",
    version,
    about = "Grated-nanofiber LIDDI and mean-field relaxation experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// TOML configuration; the shipped defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for trajectory ensembles.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Largest separation in laser wavelengths.
    #[arg(long, global = true)]
    z_max: Option<f64>,
    /// Number of separation grid points.
    #[arg(long, global = true)]
    grid: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Fiber and grating dispersion around the laser frequency.
    Dispersion,
    /// Enhancement factor with and without the grating.
    EtaTable,
    /// Spatial profile F(z), its quadrature check and U(z).
    Potential,
    /// Formula relaxation time versus the canonical time.
    Fig2,
    /// Measured microcanonical relaxation times and their N scaling.
    Scaling,
}

fn execute(cli: &Cli) -> Result<PathBuf, HarnessError> {
    let overrides = Overrides {
        seed: cli.seed,
        out: cli.out.clone(),
        z_max: cli.z_max,
        grid: cli.grid,
    };
    let cfg = load_config_with(cli.config.as_deref(), &overrides)?;
    let command = match cli.command {
        Cmd::Dispersion => Command::Dispersion,
        Cmd::EtaTable => Command::EtaTable,
        Cmd::Potential => Command::Potential,
        Cmd::Fig2 => Command::Fig2,
        Cmd::Scaling => Command::Scaling,
    };
    run(command, &cfg, cli.workers)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(path) => {
            println!("{}", path.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
