//! Simulation and threshold analysis for the two-species multimolecular
//! reaction model with interval-valued parameters and compensated Poisson
//! jumps.
//!
//! - [`interval`]: interval numbers and the geometric interval-valued function
//! - [`jumps`]: finite atomic jump measures
//! - [`model`]: parameter realization and closed-form thresholds
//! - [`engine`]: Euler–Maruyama integration with jumps
//! - [`mc`]: ensembles, regime classification, verification and sweeps

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::should_implement_trait)]

pub mod engine;
pub mod interval;
pub mod jumps;
pub mod mc;
pub mod model;

pub use engine::{
    drift, path_rng, simulate, simulate_with_rng, stability_dt_estimate, step,
    upsilon_invariance_check, EngineError, Integrator, PathRecorder, PathSample, PathState,
    SimConfig, StepOutcome, UpsilonDiagnostic, UPSILON_LEAK_CONSTANT,
};
pub use interval::{IntervalError, IntervalNumber};
pub use jumps::{JumpMark, JumpMeasureSpec, JumpSpecError};
pub use mc::{
    analyze_point, check_phi_identity, classify_regime, run_ensemble, simulate_paths, sweep,
    verify_extinction, verify_persistence, AnalysisError, AnalysisOptions, EnsembleReport,
    PathSummary, Regime, RowStatus, SweepRow, Verdict, VerdictKind,
};
pub use model::{
    build_threshold_report, compute_delta, compute_k, compute_persistence_bound, compute_r1,
    compute_r1s, compute_sigma_primes, evaluate_extinction_conditions, realize, CrispParams,
    ExtinctionCondition, ExtinctionConditions, ImpreciseParams, ModelError, NoiseThresholds,
    PersistenceBound, ThresholdReport,
};
