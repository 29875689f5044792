//! Fixed-step Euler–Maruyama integrator with compensated Poisson jumps.
//!
//! One step from `(x, y)` with step `dt`:
//!
//! ```text
//! g      = x^p y
//! noise  = sigma dB + sum_j n_j gamma_j - dt sum_j rate_j gamma_j
//! x'     = x + (k1 x0 - k2 x - p k3 x^p y) dt - g noise
//! y'     = y + (p k3 x^p y - k4 y) dt        + g noise
//! ```
//!
//! with `dB ~ N(0, dt)` drawn first and then one Poisson count `n_j` per
//! mark, all from the path's own stream. The noise enters both coordinates
//! with opposite signs, so `x + y` evolves deterministically step by step.
//! Coordinates falling below `epsilon_floor` are clamped to it and counted.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::jumps::JumpMeasureSpec;
use crate::model::{CrispParams, ThresholdReport};

/// Allowed discrete overshoot of `x + y` above the invariant ceiling, in units
/// of `dt * B`. Clamp-free Euler steps with `k dt < 1` cannot leave the
/// triangle at all, so any excess points at clamping.
pub const UPSILON_LEAK_CONSTANT: f64 = 1.0;

/// Fraction of `t_end` after which recorded samples feed the tail maximum of
/// `ln y / t`.
pub const TAIL_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error(
        "initial state ({x}, {y}) is not inside the invariant region x + y <= {bound}, x, y > 0"
    )]
    InitialStateOutsideUpsilon { x: f64, y: f64, bound: f64 },
    #[error("state became non-finite at t = {t}; step size is too large")]
    NonFiniteState { t: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dt: f64,
    pub t_end: f64,
    pub seed: u64,
    pub epsilon_floor: f64,
    pub record_stride: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_end: 100.0,
            seed: 0,
            epsilon_floor: 1e-12,
            record_stride: 100,
        }
    }
}

impl SimConfig {
    pub fn validate(&self, state_bound: f64) -> Result<(), EngineError> {
        let bad = |msg: String| Err(EngineError::InvalidConfig(msg));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be positive, got {}", self.t_end));
        }
        if self.dt > self.t_end {
            return bad(format!("dt {} exceeds t_end {}", self.dt, self.t_end));
        }
        if !(self.epsilon_floor > 0.0) {
            return bad(format!(
                "epsilon_floor must be positive, got {}",
                self.epsilon_floor
            ));
        }
        if !(self.epsilon_floor < 1e-3 * state_bound) {
            return bad(format!(
                "epsilon_floor {} must be below 1e-3 * state bound ({})",
                self.epsilon_floor,
                1e-3 * state_bound
            ));
        }
        if self.record_stride == 0 {
            return bad("record_stride must be at least 1".into());
        }
        Ok(())
    }

    /// Number of full `dt` steps and the length of a trailing partial step
    /// (zero when `t_end` is a whole number of steps up to rounding).
    pub fn schedule(&self) -> (u64, f64) {
        let ratio = self.t_end / self.dt;
        let nearest = ratio.round();
        if (ratio - nearest).abs() <= 1e-9 * nearest.max(1.0) {
            return (nearest as u64, 0.0);
        }
        let full = ratio.floor();
        (full as u64, self.t_end - full * self.dt)
    }

    pub fn total_steps(&self) -> u64 {
        let (full, rem) = self.schedule();
        full + u64::from(rem > 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathState {
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

impl PathState {
    pub fn new(x: f64, y: f64) -> Self {
        Self { t: 0.0, x, y }
    }

    /// Positive and within the closed triangle `x + y <= B`. The closure is
    /// admitted so that equilibria on the edge `x + y = B` can be started from.
    pub fn inside_upsilon(&self, state_bound: f64) -> bool {
        self.x > 0.0 && self.y > 0.0 && self.x + self.y <= state_bound
    }
}

/// Drift rates `(dx/dt, dy/dt)` of the noise-free system.
pub fn drift(state: &PathState, crisp: &CrispParams) -> (f64, f64) {
    let reaction = crisp.p * crisp.k3 * state.x.powf(crisp.p) * state.y;
    (
        crisp.k1 * crisp.x0 - crisp.k2 * state.x - reaction,
        reaction - crisp.k4 * state.y,
    )
}

/// Rough explicit-Euler stability limit, `1 / L` with `L` a bound on the
/// drift Jacobian over the invariant triangle.
pub fn stability_dt_estimate(crisp: &CrispParams) -> f64 {
    let bp = crisp.state_bound().powf(crisp.p);
    1.0 / (crisp.k2 + crisp.k4 + crisp.p * crisp.k3 * bp * (1.0 + crisp.p))
}

/// A seeded stream for path `index` of an ensemble with master seed `seed`.
/// Streams depend only on `(seed, index)`, never on scheduling.
pub fn path_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub state: PathState,
    /// Whether either coordinate hit the floor on this step.
    pub clamped: bool,
    pub clamp_count: u32,
    /// Brownian increment `dB`.
    pub brownian: f64,
    /// `x^p` at the left endpoint.
    pub xp: f64,
    /// Raw jump increment `sum_j n_j gamma_j`.
    pub jump_sum: f64,
    /// Compensator `dt sum_j rate_j gamma_j`.
    pub compensator: f64,
}

/// Per-path stepping state: parameters, precomputed jump constants and a
/// scratch buffer for the Poisson counts of the last step.
pub struct Integrator<'a> {
    crisp: &'a CrispParams,
    jumps: &'a JumpMeasureSpec,
    epsilon_floor: f64,
    mean_jump_rate: f64,
    counts: Vec<u64>,
}

impl<'a> Integrator<'a> {
    pub fn new(crisp: &'a CrispParams, jumps: &'a JumpMeasureSpec, epsilon_floor: f64) -> Self {
        Self {
            crisp,
            jumps,
            epsilon_floor,
            mean_jump_rate: jumps.mean_jump_rate(),
            counts: vec![0; jumps.marks().len()],
        }
    }

    /// Poisson counts drawn by the most recent [`advance`](Self::advance).
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn advance<R: Rng + ?Sized>(
        &mut self,
        state: &PathState,
        dt: f64,
        rng: &mut R,
    ) -> Result<StepOutcome, EngineError> {
        let c = self.crisp;
        let z: f64 = StandardNormal.sample(rng);
        let brownian = dt.sqrt() * z;
        self.jumps
            .sample_jump_counts_into(dt, rng, &mut self.counts);

        let jump_sum: f64 = self
            .counts
            .iter()
            .zip(self.jumps.marks())
            .map(|(&n, m)| n as f64 * m.size)
            .sum();
        let compensator = dt * self.mean_jump_rate;

        let xp = state.x.powf(c.p);
        let g = xp * state.y;
        let reaction = c.p * c.k3 * g;
        let dx_rate = c.k1 * c.x0 - c.k2 * state.x - reaction;
        let dy_rate = reaction - c.k4 * state.y;
        let noise = g * (c.sigma * brownian + jump_sum - compensator);

        let mut x = state.x + dx_rate * dt - noise;
        let mut y = state.y + dy_rate * dt + noise;
        let t = state.t + dt;
        if !(x.is_finite() && y.is_finite()) {
            return Err(EngineError::NonFiniteState { t });
        }

        let mut clamp_count = 0;
        if x < self.epsilon_floor {
            x = self.epsilon_floor;
            clamp_count += 1;
        }
        if y < self.epsilon_floor {
            y = self.epsilon_floor;
            clamp_count += 1;
        }

        Ok(StepOutcome {
            state: PathState { t, x, y },
            clamped: clamp_count > 0,
            clamp_count,
            brownian,
            xp,
            jump_sum,
            compensator,
        })
    }
}

/// One step of length `cfg.dt`.
pub fn step<R: Rng + ?Sized>(
    state: &PathState,
    crisp: &CrispParams,
    jumps: &JumpMeasureSpec,
    cfg: &SimConfig,
    rng: &mut R,
) -> Result<StepOutcome, EngineError> {
    Integrator::new(crisp, jumps, cfg.epsilon_floor).advance(state, cfg.dt, rng)
}

/// A recorded point of a trajectory together with the running integrals at
/// that time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    /// `∫_0^t y ds` by the left-endpoint rule.
    pub int_y: f64,
    pub mart_diff: f64,
    pub mart_jump: f64,
}

impl PathSample {
    fn ratio(&self, v: f64) -> Option<f64> {
        (self.t > 0.0).then(|| v / self.t)
    }

    pub fn ln_y_over_t(&self) -> Option<f64> {
        self.ratio(self.y.ln())
    }

    pub fn avg_y(&self) -> Option<f64> {
        self.ratio(self.int_y)
    }

    pub fn mart_diff_over_t(&self) -> Option<f64> {
        self.ratio(self.mart_diff)
    }

    pub fn mart_jump_over_t(&self) -> Option<f64> {
        self.ratio(self.mart_jump)
    }
}

/// One trajectory with running time integrals and martingale accumulators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRecorder {
    pub initial: PathState,
    pub state: PathState,
    pub samples: Vec<PathSample>,
    pub int_x: f64,
    pub int_y: f64,
    pub int_xp: f64,
    pub int_x2p: f64,
    /// Diffusion martingale `sigma ∫ x^p dB`.
    pub mart_diff: f64,
    /// Jump martingale `∫∫ ln(1 + gamma x^p) Ñ(ds, du)`.
    pub mart_jump: f64,
    pub clamp_events: u64,
    pub steps: u64,
    /// Largest `x + y` over the initial state and every step.
    pub max_sum: f64,
    /// Largest `ln y / t` over recorded samples in the final tail of the run.
    pub tail_max_ly: f64,
}

impl PathRecorder {
    fn new(initial: PathState) -> Self {
        Self {
            initial,
            state: initial,
            samples: vec![PathSample {
                t: initial.t,
                x: initial.x,
                y: initial.y,
                int_y: 0.0,
                mart_diff: 0.0,
                mart_jump: 0.0,
            }],
            int_x: 0.0,
            int_y: 0.0,
            int_xp: 0.0,
            int_x2p: 0.0,
            mart_diff: 0.0,
            mart_jump: 0.0,
            clamp_events: 0,
            steps: 0,
            max_sum: initial.x + initial.y,
            tail_max_ly: f64::NEG_INFINITY,
        }
    }

    pub fn t(&self) -> f64 {
        self.state.t
    }

    pub fn avg_x(&self) -> f64 {
        self.int_x / self.t()
    }

    pub fn avg_y(&self) -> f64 {
        self.int_y / self.t()
    }

    pub fn avg_xp(&self) -> f64 {
        self.int_xp / self.t()
    }

    pub fn avg_x2p(&self) -> f64 {
        self.int_x2p / self.t()
    }

    /// `ln y(t) / t` at the current time.
    pub fn ly_estimate(&self) -> f64 {
        self.state.y.ln() / self.t()
    }

    fn record(&mut self) {
        let s = self.state;
        self.samples.push(PathSample {
            t: s.t,
            x: s.x,
            y: s.y,
            int_y: self.int_y,
            mart_diff: self.mart_diff,
            mart_jump: self.mart_jump,
        });
    }
}

/// Integrate one path on the stream of path 0 for `cfg.seed`.
pub fn simulate(
    crisp: &CrispParams,
    jumps: &JumpMeasureSpec,
    cfg: &SimConfig,
    initial: &PathState,
) -> Result<PathRecorder, EngineError> {
    simulate_with_rng(crisp, jumps, cfg, initial, &mut path_rng(cfg.seed, 0))
}

pub fn simulate_with_rng<R: Rng + ?Sized>(
    crisp: &CrispParams,
    jumps: &JumpMeasureSpec,
    cfg: &SimConfig,
    initial: &PathState,
    rng: &mut R,
) -> Result<PathRecorder, EngineError> {
    let bound = crisp.state_bound();
    cfg.validate(bound)?;
    if !initial.inside_upsilon(bound) {
        return Err(EngineError::InitialStateOutsideUpsilon {
            x: initial.x,
            y: initial.y,
            bound,
        });
    }

    let start = PathState { t: 0.0, ..*initial };
    let mut rec = PathRecorder::new(start);
    let mut integ = Integrator::new(crisp, jumps, cfg.epsilon_floor);

    // ln(1 + gamma_j x^p) per mark, refreshed each step.
    let mut log_factors = vec![0.0; jumps.marks().len()];
    let (full, rem) = cfg.schedule();
    let total = full + u64::from(rem > 0.0);
    let tail_start = (1.0 - TAIL_FRACTION) * cfg.t_end;
    let stride = cfg.record_stride as u64;

    for i in 1..=total {
        let dt = if i <= full { cfg.dt } else { rem };
        let left = rec.state;
        let out = integ.advance(&left, dt, rng)?;

        let xp = out.xp;
        rec.int_x += left.x * dt;
        rec.int_y += left.y * dt;
        rec.int_xp += xp * dt;
        rec.int_x2p += xp * xp * dt;
        rec.mart_diff += crisp.sigma * xp * out.brownian;
        if !log_factors.is_empty() {
            let mut compensated = 0.0;
            let mut realized = 0.0;
            for ((lf, m), &n) in log_factors
                .iter_mut()
                .zip(jumps.marks())
                .zip(integ.counts())
            {
                *lf = (1.0 + m.size * xp).ln();
                realized += n as f64 * *lf;
                compensated += m.rate * *lf;
            }
            rec.mart_jump += realized - dt * compensated;
            if !rec.mart_jump.is_finite() {
                return Err(EngineError::NonFiniteState { t: out.state.t });
            }
        }

        rec.state = out.state;
        rec.state.t = if i == total {
            cfg.t_end
        } else {
            i as f64 * cfg.dt
        };
        rec.clamp_events += u64::from(out.clamp_count);
        rec.steps = i;
        rec.max_sum = rec.max_sum.max(rec.state.x + rec.state.y);

        if i % stride == 0 || i == total {
            rec.record();
            if rec.state.t >= tail_start {
                rec.tail_max_ly = rec.tail_max_ly.max(rec.ly_estimate());
            }
        }
    }
    Ok(rec)
}

/// How far a path strayed above the invariant ceiling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpsilonDiagnostic {
    pub max_excess: f64,
    pub clamp_events: u64,
    pub leak_constant: f64,
    pub tolerance: f64,
    pub pass: bool,
}

pub fn upsilon_invariance_check(
    recorder: &PathRecorder,
    report: &ThresholdReport,
    cfg: &SimConfig,
) -> UpsilonDiagnostic {
    let max_excess = recorder.max_sum - report.state_bound;
    let tolerance = UPSILON_LEAK_CONSTANT * cfg.dt * report.state_bound;
    UpsilonDiagnostic {
        max_excess,
        clamp_events: recorder.clamp_events,
        leak_constant: UPSILON_LEAK_CONSTANT,
        tolerance,
        pass: max_excess <= tolerance && recorder.clamp_events == 0,
    }
}
