use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use atomlight::check::{cmd_check, CheckOptions};
use atomlight::commands::{cmd_calibrate, cmd_oracle, cmd_run, cmd_sweep, CommandOptions};
use atomlight::config::parse_config;
use atomlight::Error;

/// Raman atom-laser outcoupler driven by squeezed light.
#[derive(Parser, Debug)]
#[command(name = "atomlight", version)]
struct Cli {
    /// Output directory (overrides the config and ATOMLIGHT_OUT).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Number of evenly spaced field snapshots (0 = first and last only).
    #[arg(long, global = true)]
    snapshots: Option<usize>,
    /// Parallel workers for sweeps (default: available cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Suppress console output.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate one configuration.
    Run { config: PathBuf },
    /// Simulate the cross product of the configured sweep axes.
    Sweep { config: PathBuf },
    /// Closed-form beam splitter with a squeezed and a vacuum input.
    Oracle {
        #[arg(long)]
        eta: f64,
        #[arg(long)]
        r: f64,
        #[arg(long, default_value_t = 0.0)]
        theta: f64,
    },
    /// Fast invariant suite.
    Check {
        #[arg(long, hide = true, default_value_t = 0.0)]
        perturb_vacuum: f64,
    },
    /// Find the two-photon detuning that maximises outcoupling.
    Calibrate { config: PathBuf },
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let opts = CommandOptions {
        out: cli.out,
        snapshots: cli.snapshots,
        workers: cli.workers,
        quiet: cli.quiet,
    };
    let outcome = match cli.command {
        Command::Run { config } => parse_config(&config).and_then(|c| cmd_run(&c, &opts)).map(|_| ()),
        Command::Sweep { config } => parse_config(&config).and_then(|c| cmd_sweep(&c, &opts)).map(|_| ()),
        Command::Calibrate { config } => parse_config(&config)
            .and_then(|c| cmd_calibrate(&c, &opts))
            .map(|_| ()),
        Command::Oracle { eta, r, theta } => cmd_oracle(eta, r, theta, &opts).map(|_| ()),
        Command::Check { perturb_vacuum } => {
            let passed = cmd_check(
                CheckOptions {
                    vacuum: 1.0 + perturb_vacuum,
                    ..CheckOptions::default()
                },
                opts.quiet,
            );
            return if passed { ExitCode::SUCCESS } else { ExitCode::from(3) };
        }
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}
