//! Command-line front end for the magnetometer simulation library.
//!
//! Usage: `magsim <mode> [--config FILE] [--set KEY=VALUE ...] [--out DIR]`.
//! Each mode resolves a flat key-value configuration (defaults, then the
//! config file, then `--set` overrides), runs the corresponding sweep and
//! writes CSV artifacts plus a SCHEMA.md into the output directory.
//!
//! Exit codes: 0 on success, 1 for configuration or usage errors (the
//! message names the offending key), 2 for numerical or I/O failures.

mod config;
mod error;
mod modes;
mod output;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use config::{Mode, Settings};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "magsim",
    version,
    about = "Dark-resonance magnetometer simulations: sensitivity sweeps, \
             lineshapes, noise budgets and Monte Carlo validation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Shared per-run options.
#[derive(Args)]
struct RunArgs {
    /// Configuration file with one `key = value` per line.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override one configuration key, e.g. `--set physics.gamma0=2e-4`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Directory for the CSV artifacts and SCHEMA.md.
    #[arg(long, value_name = "DIR", default_value = ".")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Sensitivity versus input power per transmission target, with the
    /// absorption-magnetometer comparison curve.
    #[command(name = "figure4")]
    Figure4(RunArgs),
    /// Light-shift-broadened absorption lines over a list of input powers.
    #[command(name = "lineshape")]
    Lineshape(RunArgs),
    /// Full photon-counting budget at one operating point.
    #[command(name = "snr_point")]
    SnrPoint(RunArgs),
    /// Quantum-limit factors and optima tabulated over transmission.
    #[command(name = "sql_table")]
    SqlTable(RunArgs),
    /// Monte Carlo validation of the light-shift phase noise.
    #[command(name = "mc_validate")]
    McValidate(RunArgs),
    /// Generic interferometric limit versus back-action coupling.
    #[command(name = "quantum_limit")]
    QuantumLimit(RunArgs),
}

impl Command {
    fn mode_and_args(&self) -> (Mode, &RunArgs) {
        match self {
            Command::Figure4(a) => (Mode::Figure4, a),
            Command::Lineshape(a) => (Mode::Lineshape, a),
            Command::SnrPoint(a) => (Mode::SnrPoint, a),
            Command::SqlTable(a) => (Mode::SqlTable, a),
            Command::McValidate(a) => (Mode::McValidate, a),
            Command::QuantumLimit(a) => (Mode::QuantumLimit, a),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e)
            if matches!(
                e.kind(),
                ErrorKind::DisplayHelp
                    | ErrorKind::DisplayVersion
                    | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand
            ) =>
        {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };

    let (mode, args) = cli.command.mode_and_args();
    let settings = match Settings::resolve(mode, args.config.as_deref(), &args.set) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(1);
        }
    };

    match modes::run(&settings, &args.out) {
        Ok(files) => {
            for file in files {
                println!("wrote {}", file.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
