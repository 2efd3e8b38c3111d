use clap::{Parser, Subcommand};
use hsdelay_cli::commands::{certify, observability, run, spectrum, sweep};
use hsdelay_cli::{CliError, Config};
use std::path::PathBuf;
use std::process::ExitCode;

/// Simulation and stability toolkit for the Hirota-Satsuma system with
/// delayed boundary feedback.
#[derive(Parser)]
#[command(name = "hsdelay", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one configuration and write energy and trace CSVs.
    Run { config: PathBuf },
    /// Print the parameter certificate for a gain point.
    Certify {
        #[arg(long, allow_negative_numbers = true)]
        alpha: f64,
        #[arg(long, allow_negative_numbers = true)]
        beta: f64,
        #[arg(long, default_value_t = 1.0)]
        length: f64,
        #[arg(long, default_value_t = 1.0)]
        delay: f64,
        #[arg(long)]
        mu1: Option<f64>,
        #[arg(long)]
        mu2: Option<f64>,
        /// Data radius for the decay rate; defaults to 0.
        #[arg(long)]
        radius: Option<f64>,
    },
    /// Sweep the gains over a grid and write one CSV row per point.
    Sweep { config: PathBuf },
    /// Estimate the observability constant from random data.
    Observability { config: PathBuf },
    /// Spectral abscissa and dissipativity of the discrete generator.
    Spectrum { config: PathBuf },
}

fn dispatch(command: Command) -> Result<String, CliError> {
    match command {
        Command::Certify {
            alpha,
            beta,
            length,
            delay,
            mu1,
            mu2,
            radius,
        } => Ok(certify::certificate(&certify::CertifyArgs {
            alpha,
            beta,
            length,
            delay,
            mu1,
            mu2,
            radius,
        })),
        Command::Run { config } => run::execute(&Config::load(&config)?),
        Command::Sweep { config } => sweep::execute(&Config::load(&config)?),
        Command::Observability { config } => observability::execute(&Config::load(&config)?),
        Command::Spectrum { config } => spectrum::execute(&Config::load(&config)?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(report) => {
            print!("{report}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
