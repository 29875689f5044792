//! Subcommands. Each writes CSV to the given sink and returns a process
//! exit status.

use std::fmt;
use std::io::Write;

use selkov::{
    analyze_point, build_threshold_report, simulate, sweep, AnalysisError, EngineError, ModelError,
    RowStatus, SweepRow,
};
use thiserror::Error;

use crate::config::{RunConfig, UpsilonSelection};
use crate::output;

/// Process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success = 0,
    VerificationFailed = 3,
    AssumptionViolated = 2,
    Failure = 1,
}

impl Status {
    pub fn code(self) -> i32 {
        self as i32
    }

    /// Combine row outcomes: failures outrank assumption violations, which
    /// outrank verification failures.
    fn worst(self, other: Status) -> Status {
        fn rank(s: Status) -> u8 {
            match s {
                Status::Success => 0,
                Status::VerificationFailed => 1,
                Status::AssumptionViolated => 2,
                Status::Failure => 3,
            }
        }
        if rank(other) > rank(self) {
            other
        } else {
            self
        }
    }
}

#[derive(Debug, Error)]
pub enum CommandError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("{0}")]
    Usage(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Thresholds,
    Simulate,
    Verify,
    Sweep,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Command::Thresholds => "thresholds",
            Command::Simulate => "simulate",
            Command::Verify => "verify",
            Command::Sweep => "sweep",
        })
    }
}

pub fn run_command<W: Write>(
    cmd: Command,
    cfg: &RunConfig,
    out: W,
) -> Result<Status, CommandError> {
    match cmd {
        Command::Thresholds => cmd_thresholds(cfg, out),
        Command::Simulate => cmd_simulate(cfg, out),
        Command::Verify => cmd_verify(cfg, out),
        Command::Sweep => cmd_sweep(cfg, out),
    }
}

/// Run metadata. Deliberately free of timestamps and thread counts so that
/// output bytes depend only on the config.
fn metadata_line<W: Write>(cfg: &RunConfig, out: &mut W) -> std::io::Result<()> {
    writeln!(
        out,
        "# selkov {} seed={} dt={} t_end={} epsilon_floor={:e} n_paths={}",
        env!("CARGO_PKG_VERSION"),
        cfg.sim.seed,
        cfg.sim.dt,
        cfg.sim.t_end,
        cfg.sim.epsilon_floor,
        cfg.n_paths
    )
}

pub fn cmd_thresholds<W: Write>(cfg: &RunConfig, mut out: W) -> Result<Status, CommandError> {
    metadata_line(cfg, &mut out)?;
    let mut w = output::writer(out);
    w.write_record(output::THRESHOLD_COLUMNS)?;
    let mut status = Status::Success;
    for u in cfg.upsilon.values() {
        let report = build_threshold_report(&cfg.params, u, &cfg.jumps)?;
        if !report.h_holds {
            status = Status::AssumptionViolated;
        }
        w.write_record(output::threshold_fields(u, &report))?;
    }
    w.flush()?;
    Ok(status)
}

pub fn cmd_simulate<W: Write>(cfg: &RunConfig, mut out: W) -> Result<Status, CommandError> {
    let UpsilonSelection::Single(u) = cfg.upsilon else {
        return Err(CommandError::Usage(
            "simulate needs a single upsilon, not a grid".into(),
        ));
    };
    let crisp = selkov::realize(&cfg.params, u)?;
    let rec = simulate(&crisp, &cfg.jumps, &cfg.sim, &cfg.initial)?;
    metadata_line(cfg, &mut out)?;
    let mut w = output::writer(out);
    w.write_record(output::TRACE_COLUMNS)?;
    for s in &rec.samples {
        w.write_record(output::trace_fields(s))?;
    }
    w.flush()?;
    Ok(Status::Success)
}

fn row_status(row: &SweepRow) -> Status {
    match row.status {
        RowStatus::Pass | RowStatus::NotApplicable => Status::Success,
        RowStatus::Fail => Status::VerificationFailed,
        RowStatus::AssumptionViolated => Status::AssumptionViolated,
        RowStatus::Error => Status::Failure,
    }
}

fn write_rows<W: Write>(
    cfg: &RunConfig,
    rows: &[SweepRow],
    mut out: W,
) -> Result<Status, CommandError> {
    metadata_line(cfg, &mut out)?;
    let mut w = output::writer(out);
    w.write_record(output::sweep_header())?;
    let mut status = Status::Success;
    for row in rows {
        w.write_record(output::sweep_fields(row))?;
        status = status.worst(row_status(row));
    }
    w.flush()?;
    Ok(status)
}

/// Ensemble and verdict for every configured upsilon.
pub fn cmd_verify<W: Write>(cfg: &RunConfig, out: W) -> Result<Status, CommandError> {
    let rows: Vec<SweepRow> = cfg
        .upsilon
        .values()
        .into_iter()
        .map(|u| {
            analyze_point(
                &cfg.params,
                &cfg.jumps,
                &cfg.sim,
                u,
                cfg.n_paths,
                &cfg.initial,
                &cfg.analysis,
            )
        })
        .collect();
    for row in &rows {
        if let Some(e) = &row.error {
            if row.status == RowStatus::Error {
                eprintln!("upsilon {}: {e}", row.upsilon);
            }
        }
    }
    write_rows(cfg, &rows, out)
}

pub fn cmd_sweep<W: Write>(cfg: &RunConfig, out: W) -> Result<Status, CommandError> {
    let UpsilonSelection::Grid(grid) = &cfg.upsilon else {
        return Err(CommandError::Usage("sweep needs upsilon_grid".into()));
    };
    let rows = sweep(
        &cfg.params,
        &cfg.jumps,
        &cfg.sim,
        grid,
        cfg.n_paths,
        &cfg.initial,
        &cfg.analysis,
    )?;
    for row in rows.iter().filter(|r| r.status == RowStatus::Error) {
        eprintln!(
            "upsilon {}: {}",
            row.upsilon,
            row.error.as_deref().unwrap_or("")
        );
    }
    write_rows(cfg, &rows, out)
}
