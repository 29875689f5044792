//! Parameter realization and the closed-form thresholds of the model
//!
//! ```text
//! dx = [k1 x0 - k2 x - p k3 x^p y] dt - x^p y (sigma dB + ∫ gamma(u) Ñ(dt, du))
//! dy = [p k3 x^p y - k4 y] dt        + x^p y (sigma dB + ∫ gamma(u) Ñ(dt, du))
//! ```
//!
//! with every rate constant carried as an interval and realized at an
//! imprecision level `upsilon` through [`IntervalNumber::value_at`].
//!
//! Notation used below: `k = min(k2, k4)`, `B = k1 x0 / k` (the ceiling of the
//! invariant triangle `x + y < B`), and `delta` the tightest constant with
//! `|B^p gamma_j| <= delta < 1` over all jump marks.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interval::{IntervalError, IntervalNumber};
use crate::jumps::JumpMeasureSpec;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error(transparent)]
    Interval(#[from] IntervalError),
    #[error("parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("jump bound assumption violated at mark {mark}: |B^p * gamma| = {value} >= 1")]
    AssumptionHViolated { mark: usize, value: f64 },
}

/// Interval-valued rate constants plus the fixed substrate concentration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpreciseParams {
    pub k1: IntervalNumber,
    pub k2: IntervalNumber,
    pub k3: IntervalNumber,
    pub k4: IntervalNumber,
    pub p: IntervalNumber,
    pub sigma: IntervalNumber,
    pub x0: f64,
}

impl ImpreciseParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        for (name, iv) in self.named() {
            if name == "sigma" && iv.lower() == 0.0 && iv.is_degenerate() {
                continue;
            }
            if !(iv.lower() > 0.0) {
                return Err(ModelError::InvalidParameter {
                    name,
                    reason: format!("lower endpoint must be positive, got {}", iv.lower()),
                });
            }
        }
        if self.p.lower() < 1.0 {
            return Err(ModelError::InvalidParameter {
                name: "p",
                reason: format!("lower endpoint must be at least 1, got {}", self.p.lower()),
            });
        }
        if !(self.x0 > 0.0 && self.x0.is_finite()) {
            return Err(ModelError::InvalidParameter {
                name: "x0",
                reason: format!("must be positive, got {}", self.x0),
            });
        }
        Ok(())
    }

    pub fn named(&self) -> [(&'static str, IntervalNumber); 6] {
        [
            ("k1", self.k1),
            ("k2", self.k2),
            ("k3", self.k3),
            ("k4", self.k4),
            ("p", self.p),
            ("sigma", self.sigma),
        ]
    }

    pub fn is_degenerate(&self) -> bool {
        self.named().iter().all(|(_, iv)| iv.is_degenerate())
    }

    /// Every interval collapsed to the point `value`'s crisp counterpart.
    pub fn from_crisp(crisp: &CrispParams) -> Result<Self, ModelError> {
        Ok(Self {
            k1: IntervalNumber::point(crisp.k1)?,
            k2: IntervalNumber::point(crisp.k2)?,
            k3: IntervalNumber::point(crisp.k3)?,
            k4: IntervalNumber::point(crisp.k4)?,
            p: IntervalNumber::point(crisp.p)?,
            sigma: IntervalNumber::point(crisp.sigma)?,
            x0: crisp.x0,
        })
    }
}

/// Point parameters at a single imprecision level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrispParams {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub k4: f64,
    pub p: f64,
    pub sigma: f64,
    pub x0: f64,
    pub upsilon: f64,
}

impl CrispParams {
    /// `k = min(k2, k4)`.
    pub fn k(&self) -> f64 {
        self.k2.min(self.k4)
    }

    /// `B = k1 x0 / k`.
    pub fn state_bound(&self) -> f64 {
        self.k1 * self.x0 / self.k()
    }

    /// Deterministic threshold `R1 = (p k3 / k4) (k1 x0 / k2)^p`.
    pub fn r1(&self) -> f64 {
        self.p * self.k3 / self.k4 * (self.k1 * self.x0 / self.k2).powf(self.p)
    }

    /// `(x*, y*)` where the drift vanishes with `y* > 0`, if it exists.
    pub fn positive_equilibrium(&self) -> Option<(f64, f64)> {
        let x = (self.k4 / (self.p * self.k3)).powf(1.0 / self.p);
        let y = (self.k1 * self.x0 - self.k2 * x) / self.k4;
        (y > 0.0).then_some((x, y))
    }
}

/// Realize every interval at `upsilon`.
pub fn realize(params: &ImpreciseParams, upsilon: f64) -> Result<CrispParams, ModelError> {
    params.validate()?;
    Ok(CrispParams {
        k1: params.k1.value_at(upsilon)?,
        k2: params.k2.value_at(upsilon)?,
        k3: params.k3.value_at(upsilon)?,
        k4: params.k4.value_at(upsilon)?,
        p: params.p.value_at(upsilon)?,
        sigma: realize_sigma(&params.sigma, upsilon)?,
        x0: params.x0,
        upsilon,
    })
}

/// The noise-free point `[0, 0]` is admitted for sigma only.
fn realize_sigma(sigma: &IntervalNumber, upsilon: f64) -> Result<f64, ModelError> {
    if sigma.upper() == 0.0 {
        return Ok(0.0);
    }
    Ok(sigma.value_at(upsilon)?)
}

pub fn compute_k(crisp: &CrispParams) -> f64 {
    crisp.k()
}

/// Largest `|B^p gamma_j|` over the marks and the index attaining it.
/// `(0.0, None)` for the jump-free model.
pub fn jump_bound_constant(crisp: &CrispParams, jumps: &JumpMeasureSpec) -> (f64, Option<usize>) {
    let bp = crisp.state_bound().powf(crisp.p);
    jumps
        .marks()
        .iter()
        .enumerate()
        .map(|(i, m)| ((bp * m.size).abs(), Some(i)))
        .fold(
            (0.0, None),
            |acc, cur| if cur.0 > acc.0 { cur } else { acc },
        )
}

/// Tightest `delta` for the jump bound assumption, or an error naming the
/// first mark that reaches 1.
pub fn compute_delta(crisp: &CrispParams, jumps: &JumpMeasureSpec) -> Result<f64, ModelError> {
    let bp = crisp.state_bound().powf(crisp.p);
    for (mark, m) in jumps.marks().iter().enumerate() {
        let value = (bp * m.size).abs();
        if !(value < 1.0) {
            return Err(ModelError::AssumptionHViolated { mark, value });
        }
    }
    Ok(jump_bound_constant(crisp, jumps).0)
}

/// `(sigma'^2, sigma''^2)`: the squared noise intensity plus the jump second
/// moment discounted by `(1 + delta)^2` and `(1 - delta)^2` respectively.
pub fn compute_sigma_primes(
    crisp: &CrispParams,
    jumps: &JumpMeasureSpec,
    delta: f64,
) -> (f64, f64) {
    let s2 = crisp.sigma * crisp.sigma;
    let plus = (1.0 + delta) * (1.0 + delta);
    let minus = (1.0 - delta) * (1.0 - delta);
    (
        s2 + jumps.integral_gamma_sq_weighted(plus),
        s2 + jumps.integral_gamma_sq_weighted(minus),
    )
}

pub fn compute_r1(crisp: &CrispParams) -> f64 {
    crisp.r1()
}

/// `R1^s = R1 - sigma''^2 / (2 k4) * B^(2p)`.
pub fn compute_r1s(crisp: &CrispParams, jumps: &JumpMeasureSpec) -> Result<f64, ModelError> {
    let delta = compute_delta(crisp, jumps)?;
    let (_, sdp) = compute_sigma_primes(crisp, jumps, delta);
    Ok(r1s_from(crisp, sdp))
}

fn r1s_from(crisp: &CrispParams, sigma_dprime_sq: f64) -> f64 {
    let b2p = crisp.state_bound().powf(2.0 * crisp.p);
    crisp.r1() - sigma_dprime_sq / (2.0 * crisp.k4) * b2p
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExtinctionCondition {
    A1,
    A2,
}

/// Outcome of the two sufficient conditions for exponential extinction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtinctionConditions {
    pub a1_holds: bool,
    pub a2_holds: bool,
    /// `p^2 k3^2 / (2 sigma'^2) - k4`, present when A1 holds.
    pub a1_bound: Option<f64>,
    /// `k4 [(p k3 / k4) B^p - sigma'^2 / (2 k4) B^(2p) - 1]`, present when A2 holds.
    pub a2_bound: Option<f64>,
    /// Condition supplying [`bound`](Self::bound); the smaller bound wins
    /// when both hold, A1 on ties.
    pub binding: Option<ExtinctionCondition>,
    /// Bound on `limsup ln y(t) / t`.
    pub bound: Option<f64>,
}

/// A1: `sigma'^2 > p^2 k3^2 / (2 k4)`.
/// A2: `sigma'^2 <= p k3 / B^p` and `(p k3 / k4) B^p - sigma'^2 / (2 k4) B^(2p) < 1`.
pub fn evaluate_extinction_conditions(
    crisp: &CrispParams,
    jumps: &JumpMeasureSpec,
) -> Result<ExtinctionConditions, ModelError> {
    let delta = compute_delta(crisp, jumps)?;
    let (sp, _) = compute_sigma_primes(crisp, jumps, delta);
    Ok(extinction_from(crisp, sp))
}

fn extinction_from(crisp: &CrispParams, sigma_prime_sq: f64) -> ExtinctionConditions {
    let CrispParams { k3, k4, p, .. } = *crisp;
    let bp = crisp.state_bound().powf(p);
    let b2p = crisp.state_bound().powf(2.0 * p);

    let a1_holds = sigma_prime_sq > p * p * k3 * k3 / (2.0 * k4);
    let a2_term = p * k3 / k4 * bp - sigma_prime_sq / (2.0 * k4) * b2p;
    let a2_holds = sigma_prime_sq <= p * k3 / bp && a2_term < 1.0;

    let a1_bound = a1_holds.then(|| p * p * k3 * k3 / (2.0 * sigma_prime_sq) - k4);
    let a2_bound = a2_holds.then_some(k4 * (a2_term - 1.0));

    let (binding, bound) = match (a1_bound, a2_bound) {
        (Some(b1), Some(b2)) if b2 < b1 => (Some(ExtinctionCondition::A2), Some(b2)),
        (Some(b1), _) => (Some(ExtinctionCondition::A1), Some(b1)),
        (None, Some(b2)) => (Some(ExtinctionCondition::A2), Some(b2)),
        (None, None) => (None, None),
    };
    ExtinctionConditions {
        a1_holds,
        a2_holds,
        a1_bound,
        a2_bound,
        binding,
        bound,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PersistenceBound {
    /// Lower bound on `liminf <y>_t`.
    pub bound: f64,
    /// `R1^s > 1`; only then is the bound guaranteed positive.
    pub l_holds: bool,
}

/// `-(k2/k4) [k4/(p k3) + sigma''^2/(2 p k3) B^(2p)]^(1/p) + k1 x0 / k4`.
pub fn compute_persistence_bound(
    crisp: &CrispParams,
    jumps: &JumpMeasureSpec,
) -> Result<PersistenceBound, ModelError> {
    let delta = compute_delta(crisp, jumps)?;
    let (_, sdp) = compute_sigma_primes(crisp, jumps, delta);
    Ok(persistence_from(crisp, sdp))
}

fn persistence_from(crisp: &CrispParams, sigma_dprime_sq: f64) -> PersistenceBound {
    let CrispParams {
        k1,
        k2,
        k3,
        k4,
        p,
        x0,
        ..
    } = *crisp;
    let b2p = crisp.state_bound().powf(2.0 * p);
    let inner = k4 / (p * k3) + sigma_dprime_sq / (2.0 * p * k3) * b2p;
    let bound = -(k2 / k4) * inner.powf(1.0 / p) + k1 * x0 / k4;
    PersistenceBound {
        bound,
        l_holds: r1s_from(crisp, sigma_dprime_sq) > 1.0,
    }
}

/// Quantities that exist only when the jump bound assumption holds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseThresholds {
    pub sigma_prime_sq: f64,
    pub sigma_dprime_sq: f64,
    pub r1s: f64,
    pub extinction: ExtinctionConditions,
    pub persistence: PersistenceBound,
}

impl NoiseThresholds {
    pub fn l_holds(&self) -> bool {
        self.persistence.l_holds
    }
}

/// Every analytic quantity at one imprecision level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub crisp: CrispParams,
    pub k: f64,
    pub state_bound: f64,
    /// Tightest jump bound constant; `>= 1` exactly when `h_holds` is false.
    pub delta: f64,
    pub r1: f64,
    pub h_holds: bool,
    /// `None` when `h_holds` is false.
    pub noise: Option<NoiseThresholds>,
}

impl ThresholdReport {
    pub fn from_crisp(crisp: CrispParams, jumps: &JumpMeasureSpec) -> Self {
        let (delta, _) = jump_bound_constant(&crisp, jumps);
        let h_holds = compute_delta(&crisp, jumps).is_ok();
        let noise = h_holds.then(|| {
            let (sp, sdp) = compute_sigma_primes(&crisp, jumps, delta);
            NoiseThresholds {
                sigma_prime_sq: sp,
                sigma_dprime_sq: sdp,
                r1s: r1s_from(&crisp, sdp),
                extinction: extinction_from(&crisp, sp),
                persistence: persistence_from(&crisp, sdp),
            }
        });
        Self {
            crisp,
            k: crisp.k(),
            state_bound: crisp.state_bound(),
            delta,
            r1: crisp.r1(),
            h_holds,
            noise,
        }
    }

    pub fn a1_holds(&self) -> Option<bool> {
        self.noise.map(|n| n.extinction.a1_holds)
    }

    pub fn a2_holds(&self) -> Option<bool> {
        self.noise.map(|n| n.extinction.a2_holds)
    }

    pub fn l_holds(&self) -> Option<bool> {
        self.noise.map(|n| n.l_holds())
    }

    pub fn r1s(&self) -> Option<f64> {
        self.noise.map(|n| n.r1s)
    }

    pub fn extinction_bound(&self) -> Option<f64> {
        self.noise.and_then(|n| n.extinction.bound)
    }

    pub fn persistence_lower_bound(&self) -> Option<f64> {
        self.noise.map(|n| n.persistence.bound)
    }
}

/// Realize `params` at `upsilon` and evaluate every threshold. Only invalid
/// parameters are errors; a failed jump bound assumption is reported through
/// `h_holds`.
pub fn build_threshold_report(
    params: &ImpreciseParams,
    upsilon: f64,
    jumps: &JumpMeasureSpec,
) -> Result<ThresholdReport, ModelError> {
    let crisp = realize(params, upsilon)?;
    Ok(ThresholdReport::from_crisp(crisp, jumps))
}
