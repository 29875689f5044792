//! Command-line front end: JSON config in, CSV out.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod output;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

pub use commands::{run_command, Command, CommandError, Status};
pub use config::{parse_config, ConfigError, RunConfig, UpsilonSelection};

/// Everything the binary needs after argument parsing.
#[derive(Debug, Clone)]
pub struct Invocation {
    pub command: Command,
    pub config: PathBuf,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub workers: Option<usize>,
}

/// Load the config, apply overrides and run. Errors are reported on stderr.
pub fn execute(inv: &Invocation) -> Status {
    match try_execute(inv) {
        Ok(status) => status,
        Err(msg) => {
            eprintln!("error: {msg}");
            Status::Failure
        }
    }
}

fn try_execute(inv: &Invocation) -> Result<Status, String> {
    let text = std::fs::read_to_string(&inv.config)
        .map_err(|e| format!("reading {}: {e}", inv.config.display()))?;
    let mut cfg = parse_config(&text).map_err(|e| e.to_string())?;
    if let Some(seed) = inv.seed {
        cfg.sim.seed = seed;
    }
    let target = inv
        .output
        .clone()
        .or_else(|| cfg.output_path.as_ref().map(PathBuf::from));

    let run = || -> Result<Status, CommandError> {
        match &target {
            Some(path) => {
                let mut w = BufWriter::new(File::create(path)?);
                let s = run_command(inv.command, &cfg, &mut w)?;
                w.flush()?;
                Ok(s)
            }
            None => {
                let stdout = io::stdout();
                let mut w = stdout.lock();
                let s = run_command(inv.command, &cfg, &mut w)?;
                w.flush()?;
                Ok(s)
            }
        }
    };

    let result = match inv.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| format!("thread pool: {e}"))?
            .install(run),
        None => run(),
    };
    result.map_err(|e| e.to_string())
}
