//! Monte Carlo ensembles and their comparison with the analytic thresholds.
//!
//! Paths are independent work units on streams derived from
//! `(seed, path index)`; aggregation always runs in index order, so reports
//! do not depend on how many worker threads executed the paths.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{path_rng, simulate_with_rng, EngineError, PathRecorder, PathState, SimConfig};
use crate::jumps::JumpMeasureSpec;
use crate::model::{
    build_threshold_report, CrispParams, ExtinctionCondition, ImpreciseParams, ModelError,
    ThresholdReport,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("path {index} failed: {source}")]
    Path { index: u64, source: EngineError },
    #[error("ensemble needs at least 2 paths, got {0}")]
    TooFewPaths(u64),
    #[error("the jump bound assumption does not hold; no regime can be assigned")]
    AssumptionHViolated,
    #[error("expected a {expected} regime, found {found}")]
    RegimeMismatch {
        expected: &'static str,
        found: Regime,
    },
    #[error("upsilon grid {0}")]
    InvalidGrid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisOptions {
    /// `y(T)` below this counts as extinct.
    pub extinction_cutoff: f64,
    /// Verdict margin in standard errors.
    pub se_margin: f64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            extinction_cutoff: 1e-4,
            se_margin: 3.0,
        }
    }
}

/// Per-path statistics retained after the trajectory itself is dropped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathSummary {
    pub ly: f64,
    pub tail_max_ly: f64,
    pub avg_x: f64,
    pub avg_y: f64,
    pub final_y: f64,
    pub mart_diff_over_t: f64,
    pub mart_jump_over_t: f64,
    pub phi_residual: f64,
    pub clamp_events: u64,
    pub max_sum: f64,
}

impl PathSummary {
    pub fn from_recorder(rec: &PathRecorder, crisp: &CrispParams) -> Self {
        let t = rec.t();
        Self {
            ly: rec.ly_estimate(),
            tail_max_ly: rec.tail_max_ly,
            avg_x: rec.avg_x(),
            avg_y: rec.avg_y(),
            final_y: rec.state.y,
            mart_diff_over_t: rec.mart_diff / t,
            mart_jump_over_t: rec.mart_jump / t,
            phi_residual: check_phi_identity(rec, crisp),
            clamp_events: rec.clamp_events,
            max_sum: rec.max_sum,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleReport {
    pub n_paths: u64,
    pub t_end: f64,
    pub epsilon_floor: f64,
    pub mean_ly: f64,
    pub se_ly: f64,
    /// Mean over paths of the tail maximum of `ln y / t`.
    pub mean_tail_max_ly: f64,
    pub mean_avg_y: f64,
    pub se_avg_y: f64,
    pub mean_avg_x: f64,
    pub se_avg_x: f64,
    pub extinct_fraction: f64,
    pub mean_mart_diff_over_t: f64,
    pub se_mart_diff_over_t: f64,
    pub mean_mart_jump_over_t: f64,
    pub se_mart_jump_over_t: f64,
    /// Largest identity residual over clamp-free paths (0 when none).
    pub phi_residual_max: f64,
    pub clamp_free_paths: u64,
    pub clamp_events: u64,
    pub max_sum: f64,
}

fn mean_se(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let ss: f64 = values.map(|v| (v - mean) * (v - mean)).sum();
    let sd = (ss / (n - 1.0)).sqrt();
    (mean, sd / n.sqrt())
}

impl EnsembleReport {
    /// Aggregate per-path summaries in slice order.
    pub fn from_summaries(
        paths: &[PathSummary],
        cfg: &SimConfig,
        opts: &AnalysisOptions,
    ) -> Result<Self, AnalysisError> {
        let n = paths.len() as u64;
        if n < 2 {
            return Err(AnalysisError::TooFewPaths(n));
        }
        let (mean_ly, se_ly) = mean_se(paths.iter().map(|p| p.ly));
        let (mean_avg_y, se_avg_y) = mean_se(paths.iter().map(|p| p.avg_y));
        let (mean_avg_x, se_avg_x) = mean_se(paths.iter().map(|p| p.avg_x));
        let (mean_md, se_md) = mean_se(paths.iter().map(|p| p.mart_diff_over_t));
        let (mean_mj, se_mj) = mean_se(paths.iter().map(|p| p.mart_jump_over_t));
        let (mean_tail, _) = mean_se(paths.iter().map(|p| p.tail_max_ly));
        let extinct = paths
            .iter()
            .filter(|p| p.final_y < opts.extinction_cutoff)
            .count();
        let clamp_free = paths.iter().filter(|p| p.clamp_events == 0);
        Ok(Self {
            n_paths: n,
            t_end: cfg.t_end,
            epsilon_floor: cfg.epsilon_floor,
            mean_ly,
            se_ly,
            mean_tail_max_ly: mean_tail,
            mean_avg_y,
            se_avg_y,
            mean_avg_x,
            se_avg_x,
            extinct_fraction: extinct as f64 / n as f64,
            mean_mart_diff_over_t: mean_md,
            se_mart_diff_over_t: se_md,
            mean_mart_jump_over_t: mean_mj,
            se_mart_jump_over_t: se_mj,
            phi_residual_max: clamp_free
                .clone()
                .map(|p| p.phi_residual)
                .fold(0.0, f64::max),
            clamp_free_paths: clamp_free.count() as u64,
            clamp_events: paths.iter().map(|p| p.clamp_events).sum(),
            max_sum: paths
                .iter()
                .map(|p| p.max_sum)
                .fold(f64::NEG_INFINITY, f64::max),
        })
    }
}

/// Simulate paths `0..n_paths` and return their summaries in index order.
pub fn simulate_paths(
    crisp: &CrispParams,
    jumps: &JumpMeasureSpec,
    cfg: &SimConfig,
    n_paths: u64,
    initial: &PathState,
) -> Result<Vec<PathSummary>, AnalysisError> {
    let results: Vec<Result<PathSummary, EngineError>> = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(cfg.seed, i);
            simulate_with_rng(crisp, jumps, cfg, initial, &mut rng)
                .map(|rec| PathSummary::from_recorder(&rec, crisp))
        })
        .collect();
    results
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            r.map_err(|source| AnalysisError::Path {
                index: i as u64,
                source,
            })
        })
        .collect()
}

pub fn run_ensemble(
    crisp: &CrispParams,
    jumps: &JumpMeasureSpec,
    cfg: &SimConfig,
    n_paths: u64,
    initial: &PathState,
    opts: &AnalysisOptions,
) -> Result<EnsembleReport, AnalysisError> {
    if n_paths < 2 {
        return Err(AnalysisError::TooFewPaths(n_paths));
    }
    let paths = simulate_paths(crisp, jumps, cfg, n_paths, initial)?;
    EnsembleReport::from_summaries(&paths, cfg, opts)
}

/// Residual of the time-average identity
/// `<x>_t = k1 x0 / k2 - (k4 / k2) <y>_t + phi(t)` with
/// `phi(t) = -((x(t) - x(0)) + (y(t) - y(0))) / (k2 t)`.
///
/// Clamp-free Euler paths satisfy it up to rounding since the sum `x + y`
/// telescopes through the same left-endpoint sums as the averages.
pub fn check_phi_identity(rec: &PathRecorder, crisp: &CrispParams) -> f64 {
    let t = rec.t();
    let init = rec.initial;
    let phi = -((rec.state.x - init.x) / t + (rec.state.y - init.y) / t) / crisp.k2;
    let rhs = crisp.k1 * crisp.x0 / crisp.k2 - crisp.k4 / crisp.k2 * rec.avg_y() + phi;
    (rec.avg_x() - rhs).abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    #[serde(rename = "extinct_A1")]
    ExtinctA1,
    #[serde(rename = "extinct_A2")]
    ExtinctA2,
    #[serde(rename = "persistent_L")]
    PersistentL,
    #[serde(rename = "indeterminate")]
    Indeterminate,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::ExtinctA1 => "extinct_A1",
            Regime::ExtinctA2 => "extinct_A2",
            Regime::PersistentL => "persistent_L",
            Regime::Indeterminate => "indeterminate",
        }
    }

    pub fn is_extinction(&self) -> bool {
        matches!(self, Regime::ExtinctA1 | Regime::ExtinctA2)
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Extinction conditions take precedence over persistence; when both
/// extinction conditions hold the one with the smaller bound names the regime.
pub fn classify_regime(report: &ThresholdReport) -> Result<Regime, AnalysisError> {
    let noise = report.noise.ok_or(AnalysisError::AssumptionHViolated)?;
    Ok(match noise.extinction.binding {
        Some(ExtinctionCondition::A1) => Regime::ExtinctA1,
        Some(ExtinctionCondition::A2) => Regime::ExtinctA2,
        None if noise.r1s > 1.0 => Regime::PersistentL,
        None => Regime::Indeterminate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VerdictKind {
    Extinction,
    Persistence,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub kind: VerdictKind,
    pub pass: bool,
    /// Empirical statistic: mean `ln y(T)/T` or mean `<y>_T`.
    pub statistic: f64,
    /// Theoretical bound it is compared with.
    pub reference: f64,
    /// `se_margin` times the statistic's standard error.
    pub margin: f64,
    /// Slack granted because `ln y` cannot fall below `ln(epsilon_floor) / T`.
    pub floor_correction: f64,
}

/// Pass iff `mean_ly <= bound + margin + floor_correction`, where the
/// correction lifts the bound to `ln(epsilon_floor) / T` when the floor is
/// the higher of the two.
pub fn verify_extinction(
    ens: &EnsembleReport,
    report: &ThresholdReport,
    opts: &AnalysisOptions,
) -> Result<Verdict, AnalysisError> {
    let regime = classify_regime(report)?;
    if !regime.is_extinction() {
        return Err(AnalysisError::RegimeMismatch {
            expected: "extinction",
            found: regime,
        });
    }
    let reference = report
        .extinction_bound()
        .expect("extinction regime carries a bound");
    let floor_ly = ens.epsilon_floor.ln() / ens.t_end;
    let floor_correction = (floor_ly - reference).max(0.0);
    let margin = opts.se_margin * ens.se_ly;
    Ok(Verdict {
        kind: VerdictKind::Extinction,
        pass: ens.mean_ly <= reference.max(floor_ly) + margin,
        statistic: ens.mean_ly,
        reference,
        margin,
        floor_correction,
    })
}

/// Pass iff `mean_avg_y >= bound - margin`.
pub fn verify_persistence(
    ens: &EnsembleReport,
    report: &ThresholdReport,
    opts: &AnalysisOptions,
) -> Result<Verdict, AnalysisError> {
    let regime = classify_regime(report)?;
    if regime != Regime::PersistentL {
        return Err(AnalysisError::RegimeMismatch {
            expected: "persistence",
            found: regime,
        });
    }
    let reference = report
        .persistence_lower_bound()
        .expect("persistent regime carries a bound");
    let margin = opts.se_margin * ens.se_avg_y;
    Ok(Verdict {
        kind: VerdictKind::Persistence,
        pass: ens.mean_avg_y >= reference - margin,
        statistic: ens.mean_avg_y,
        reference,
        margin,
        floor_correction: 0.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowStatus {
    Pass,
    Fail,
    NotApplicable,
    AssumptionViolated,
    Error,
}

impl RowStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            RowStatus::Pass => "pass",
            RowStatus::Fail => "fail",
            RowStatus::NotApplicable => "not-applicable",
            RowStatus::AssumptionViolated => "assumption-h-violated",
            RowStatus::Error => "error",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub upsilon: f64,
    pub thresholds: Option<ThresholdReport>,
    pub regime: Option<Regime>,
    pub ensemble: Option<EnsembleReport>,
    pub verdict: Option<Verdict>,
    pub status: RowStatus,
    pub error: Option<String>,
}

impl SweepRow {
    fn failed(upsilon: f64, thresholds: Option<ThresholdReport>, err: impl fmt::Display) -> Self {
        Self {
            upsilon,
            thresholds,
            regime: None,
            ensemble: None,
            verdict: None,
            status: RowStatus::Error,
            error: Some(err.to_string()),
        }
    }
}

/// Thresholds, ensemble and verdict at a single imprecision level. Problems
/// are recorded in the row rather than returned.
pub fn analyze_point(
    params: &ImpreciseParams,
    jumps: &JumpMeasureSpec,
    cfg: &SimConfig,
    upsilon: f64,
    n_paths: u64,
    initial: &PathState,
    opts: &AnalysisOptions,
) -> SweepRow {
    let report = match build_threshold_report(params, upsilon, jumps) {
        Ok(r) => r,
        Err(e) => return SweepRow::failed(upsilon, None, e),
    };
    if !report.h_holds {
        return SweepRow {
            upsilon,
            thresholds: Some(report),
            regime: None,
            ensemble: None,
            verdict: None,
            status: RowStatus::AssumptionViolated,
            error: Some(
                ModelError::AssumptionHViolated {
                    mark: crate::model::jump_bound_constant(&report.crisp, jumps)
                        .1
                        .unwrap_or(0),
                    value: report.delta,
                }
                .to_string(),
            ),
        };
    }
    let regime = classify_regime(&report).expect("assumption checked above");
    let ens = match run_ensemble(&report.crisp, jumps, cfg, n_paths, initial, opts) {
        Ok(e) => e,
        Err(e) => return SweepRow::failed(upsilon, Some(report), e),
    };
    let verdict = match regime {
        Regime::ExtinctA1 | Regime::ExtinctA2 => verify_extinction(&ens, &report, opts).ok(),
        Regime::PersistentL => verify_persistence(&ens, &report, opts).ok(),
        Regime::Indeterminate => None,
    };
    let status = match verdict {
        Some(v) if v.pass => RowStatus::Pass,
        Some(_) => RowStatus::Fail,
        None => RowStatus::NotApplicable,
    };
    SweepRow {
        upsilon,
        thresholds: Some(report),
        regime: Some(regime),
        ensemble: Some(ens),
        verdict,
        status,
        error: None,
    }
}

/// One row per grid value, in grid order. Every row reuses `cfg.seed`, so
/// rows share random numbers and differ only through the parameters.
pub fn sweep(
    params: &ImpreciseParams,
    jumps: &JumpMeasureSpec,
    cfg: &SimConfig,
    upsilon_grid: &[f64],
    n_paths: u64,
    initial: &PathState,
    opts: &AnalysisOptions,
) -> Result<Vec<SweepRow>, AnalysisError> {
    if upsilon_grid.is_empty() {
        return Err(AnalysisError::InvalidGrid("is empty".into()));
    }
    if let Some(bad) = upsilon_grid.iter().find(|u| !(0.0..=1.0).contains(*u)) {
        return Err(AnalysisError::InvalidGrid(format!(
            "value {bad} is outside [0, 1]"
        )));
    }
    Ok(upsilon_grid
        .iter()
        .map(|&u| analyze_point(params, jumps, cfg, u, n_paths, initial, opts))
        .collect())
}
