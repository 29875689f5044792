//! Finite atomic jump measure: a list of marks, each with an arrival rate and
//! a jump coefficient. Every integral against the measure is an exact sum.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JumpSpecError {
    #[error("mark {index}: rate must be positive and finite, got {rate}")]
    NonPositiveRate { index: usize, rate: f64 },
    #[error("mark {index}: |gamma| = {size} must be below the bound {z_bound}")]
    SizeOutOfBound {
        index: usize,
        size: f64,
        z_bound: f64,
    },
    #[error("jump size bound must be positive and finite, got {0}")]
    InvalidBound(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpMark {
    /// Arrivals per unit time carried by this atom.
    pub rate: f64,
    /// Jump coefficient applied to `x^p y` on each arrival.
    #[serde(rename = "gamma")]
    pub size: f64,
}

/// Validated jump measure. An empty mark list is the jump-free model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawJumpSpec", into = "RawJumpSpec")]
pub struct JumpMeasureSpec {
    marks: Vec<JumpMark>,
    z_bound: f64,
}

#[derive(Serialize, Deserialize)]
struct RawJumpSpec {
    #[serde(default)]
    marks: Vec<JumpMark>,
    #[serde(default = "default_z_bound")]
    z_bound: f64,
}

fn default_z_bound() -> f64 {
    1.0
}

impl TryFrom<RawJumpSpec> for JumpMeasureSpec {
    type Error = JumpSpecError;

    fn try_from(raw: RawJumpSpec) -> Result<Self, Self::Error> {
        Self::new(raw.marks, raw.z_bound)
    }
}

impl From<JumpMeasureSpec> for RawJumpSpec {
    fn from(spec: JumpMeasureSpec) -> Self {
        RawJumpSpec {
            marks: spec.marks,
            z_bound: spec.z_bound,
        }
    }
}

impl JumpMeasureSpec {
    pub fn new(marks: Vec<JumpMark>, z_bound: f64) -> Result<Self, JumpSpecError> {
        if !(z_bound > 0.0 && z_bound.is_finite()) {
            return Err(JumpSpecError::InvalidBound(z_bound));
        }
        for (index, m) in marks.iter().enumerate() {
            if !(m.rate > 0.0 && m.rate.is_finite()) {
                return Err(JumpSpecError::NonPositiveRate {
                    index,
                    rate: m.rate,
                });
            }
            if !(m.size.abs() < z_bound) {
                return Err(JumpSpecError::SizeOutOfBound {
                    index,
                    size: m.size,
                    z_bound,
                });
            }
        }
        Ok(Self { marks, z_bound })
    }

    pub fn none() -> Self {
        Self {
            marks: Vec::new(),
            z_bound: default_z_bound(),
        }
    }

    pub fn marks(&self) -> &[JumpMark] {
        &self.marks
    }

    pub fn z_bound(&self) -> f64 {
        self.z_bound
    }

    pub fn is_empty(&self) -> bool {
        self.marks.is_empty()
    }

    /// Total mass of the measure, `sum_j rate_j`.
    pub fn total_rate(&self) -> f64 {
        self.marks.iter().map(|m| m.rate).sum()
    }

    /// `sum_j rate_j * gamma_j^2 / denom`.
    pub fn integral_gamma_sq_weighted(&self, denom: f64) -> f64 {
        self.marks
            .iter()
            .map(|m| m.size * m.size / denom * m.rate)
            .sum()
    }

    /// Compensator density `sum_j rate_j * gamma_j`; multiplied by `dt` it is
    /// the mean of the raw jump increment over a step.
    pub fn mean_jump_rate(&self) -> f64 {
        self.marks.iter().map(|m| m.size * m.rate).sum()
    }

    /// Independent Poisson counts, one per mark, with means `rate_j * dt`.
    pub fn sample_jump_counts<R: Rng + ?Sized>(&self, dt: f64, rng: &mut R) -> Vec<u64> {
        let mut out = vec![0; self.marks.len()];
        self.sample_jump_counts_into(dt, rng, &mut out);
        out
    }

    /// Same as [`sample_jump_counts`](Self::sample_jump_counts) but writes into
    /// a caller-owned buffer of length `marks().len()`.
    pub fn sample_jump_counts_into<R: Rng + ?Sized>(&self, dt: f64, rng: &mut R, out: &mut [u64]) {
        debug_assert_eq!(out.len(), self.marks.len());
        for (slot, m) in out.iter_mut().zip(&self.marks) {
            *slot = poisson_count(m.rate * dt, rng);
        }
    }
}

fn poisson_count<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    match Poisson::new(mean) {
        Ok(dist) => {
            let k: f64 = dist.sample(rng);
            k as u64
        }
        Err(_) => 0,
    }
}
