use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use selkov_cli::{execute, Command, Invocation};

#[derive(Parser)]
#[command(
    name = "selkov",
    version,
    about = "Thresholds and Monte Carlo checks for the imprecise jump-diffusion reaction model"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(clap::Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Master seed, overriding the config.
    #[arg(long)]
    seed: Option<u64>,
    /// CSV destination; standard output when absent.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Worker threads for ensemble paths.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Analytic thresholds at every upsilon.
    Thresholds(Common),
    /// One sample path at a single upsilon.
    Simulate(Common),
    /// Ensembles checked against the thresholds.
    Verify(Common),
    /// Verify over an upsilon grid.
    Sweep(Common),
}

fn main() -> ExitCode {
    // clap exits with 2 on usage errors, which is reserved for assumption
    // violations here.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let (command, c) = match cli.command {
        Cmd::Thresholds(c) => (Command::Thresholds, c),
        Cmd::Simulate(c) => (Command::Simulate, c),
        Cmd::Verify(c) => (Command::Verify, c),
        Cmd::Sweep(c) => (Command::Sweep, c),
    };
    let status = execute(&Invocation {
        command,
        config: c.config,
        seed: c.seed,
        output: c.output,
        workers: c.workers,
    });
    ExitCode::from(status.code() as u8)
}
