//! JSON run configuration.
//!
//! ```json
//! {
//!   "params": { "k1": [0.9, 1.1], "k2": 1.0, "k3": 2.0, "k4": 1.0,
//!               "p": 1.0, "sigma": [0.3, 1.8], "x0": 1.0 },
//!   "jumps": { "z_bound": 1.0, "marks": [ { "rate": 1.0, "gamma": 0.1 } ] },
//!   "sim": { "dt": 0.001, "t_end": 100.0, "seed": 42,
//!            "epsilon_floor": 1e-12, "record_stride": 100 },
//!   "upsilon_grid": [0.0, 0.5, 1.0],
//!   "n_paths": 200,
//!   "initial": [0.4, 0.4]
//! }
//! ```
//!
//! Intervals are either two-element arrays or a single number. Exactly one of
//! `upsilon` and `upsilon_grid` must be given. `jumps`, `sim` fields other than
//! `dt` and `t_end`, `n_paths`, `output_path`, `extinction_cutoff` and
//! `se_margin` are optional.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use selkov::{
    realize, AnalysisOptions, ImpreciseParams, IntervalNumber, JumpMeasureSpec, PathState,
    SimConfig,
};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid config: {0}")]
    Validation(String),
}

/// Either `[lo, hi]` or a bare number.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
enum IntervalInput {
    Point(f64),
    Pair([f64; 2]),
}

fn interval<'de, D: serde::Deserializer<'de>>(d: D) -> Result<IntervalNumber, D::Error> {
    let (lo, hi) = match IntervalInput::deserialize(d)? {
        IntervalInput::Point(v) => (v, v),
        IntervalInput::Pair([lo, hi]) => (lo, hi),
    };
    IntervalNumber::new(lo, hi).map_err(serde::de::Error::custom)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamsDoc {
    #[serde(deserialize_with = "interval")]
    k1: IntervalNumber,
    #[serde(deserialize_with = "interval")]
    k2: IntervalNumber,
    #[serde(deserialize_with = "interval")]
    k3: IntervalNumber,
    #[serde(deserialize_with = "interval")]
    k4: IntervalNumber,
    #[serde(deserialize_with = "interval")]
    p: IntervalNumber,
    #[serde(deserialize_with = "interval")]
    sigma: IntervalNumber,
    x0: f64,
}

fn default_seed() -> u64 {
    SimConfig::default().seed
}
fn default_floor() -> f64 {
    SimConfig::default().epsilon_floor
}
fn default_stride() -> usize {
    SimConfig::default().record_stride
}
fn default_paths() -> u64 {
    200
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimDoc {
    dt: f64,
    t_end: f64,
    #[serde(default = "default_seed")]
    seed: u64,
    #[serde(default = "default_floor")]
    epsilon_floor: f64,
    #[serde(default = "default_stride")]
    record_stride: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunDoc {
    params: ParamsDoc,
    #[serde(default = "JumpMeasureSpec::none")]
    jumps: JumpMeasureSpec,
    sim: SimDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    upsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    upsilon_grid: Option<Vec<f64>>,
    #[serde(default = "default_paths")]
    n_paths: u64,
    initial: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    output_path: Option<String>,
    #[serde(default)]
    extinction_cutoff: Option<f64>,
    #[serde(default)]
    se_margin: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum UpsilonSelection {
    Single(f64),
    Grid(Vec<f64>),
}

impl UpsilonSelection {
    pub fn values(&self) -> Vec<f64> {
        match self {
            UpsilonSelection::Single(u) => vec![*u],
            UpsilonSelection::Grid(g) => g.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: ImpreciseParams,
    pub jumps: JumpMeasureSpec,
    pub sim: SimConfig,
    pub upsilon: UpsilonSelection,
    pub n_paths: u64,
    pub initial: PathState,
    pub output_path: Option<String>,
    pub analysis: AnalysisOptions,
}

pub fn parse_config(document: &str) -> Result<RunConfig, ConfigError> {
    let doc: RunDoc = serde_json::from_str(document).map_err(|e| ConfigError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    RunConfig::from_doc(doc)
}

impl RunConfig {
    fn from_doc(doc: RunDoc) -> Result<Self, ConfigError> {
        let invalid = |m: String| ConfigError::Validation(m);
        let p = doc.params;
        let params = ImpreciseParams {
            k1: p.k1,
            k2: p.k2,
            k3: p.k3,
            k4: p.k4,
            p: p.p,
            sigma: p.sigma,
            x0: p.x0,
        };
        params.validate().map_err(|e| invalid(e.to_string()))?;

        let upsilon = match (doc.upsilon, doc.upsilon_grid) {
            (Some(u), None) => UpsilonSelection::Single(u),
            (None, Some(g)) => UpsilonSelection::Grid(g),
            (Some(_), Some(_)) => {
                return Err(invalid(
                    "give either upsilon or upsilon_grid, not both".into(),
                ))
            }
            (None, None) => {
                return Err(invalid("one of upsilon or upsilon_grid is required".into()))
            }
        };
        let values = upsilon.values();
        if values.is_empty() {
            return Err(invalid("upsilon_grid is empty".into()));
        }
        if doc.n_paths < 2 {
            return Err(invalid(format!(
                "n_paths must be at least 2, got {}",
                doc.n_paths
            )));
        }

        let sim = SimConfig {
            dt: doc.sim.dt,
            t_end: doc.sim.t_end,
            seed: doc.sim.seed,
            epsilon_floor: doc.sim.epsilon_floor,
            record_stride: doc.sim.record_stride,
        };
        let initial = PathState::new(doc.initial[0], doc.initial[1]);
        for &u in &values {
            let crisp = realize(&params, u).map_err(|e| invalid(format!("upsilon {u}: {e}")))?;
            let bound = crisp.state_bound();
            sim.validate(bound)
                .map_err(|e| invalid(format!("upsilon {u}: {e}")))?;
            if !initial.inside_upsilon(bound) {
                return Err(invalid(format!(
                    "initial state ({}, {}) is outside x + y <= {bound} at upsilon {u}",
                    initial.x, initial.y
                )));
            }
        }

        let defaults = AnalysisOptions::default();
        let analysis = AnalysisOptions {
            extinction_cutoff: doc.extinction_cutoff.unwrap_or(defaults.extinction_cutoff),
            se_margin: doc.se_margin.unwrap_or(defaults.se_margin),
        };
        if !(analysis.extinction_cutoff > sim.epsilon_floor) {
            return Err(invalid(
                "extinction_cutoff must exceed epsilon_floor".into(),
            ));
        }
        if !(analysis.se_margin >= 0.0) {
            return Err(invalid("se_margin must be non-negative".into()));
        }

        Ok(Self {
            params,
            jumps: doc.jumps,
            sim,
            upsilon,
            n_paths: doc.n_paths,
            initial,
            output_path: doc.output_path,
            analysis,
        })
    }

    fn to_doc(&self) -> RunDoc {
        let p = &self.params;
        let (upsilon, upsilon_grid) = match &self.upsilon {
            UpsilonSelection::Single(u) => (Some(*u), None),
            UpsilonSelection::Grid(g) => (None, Some(g.clone())),
        };
        RunDoc {
            params: ParamsDoc {
                k1: p.k1,
                k2: p.k2,
                k3: p.k3,
                k4: p.k4,
                p: p.p,
                sigma: p.sigma,
                x0: p.x0,
            },
            jumps: self.jumps.clone(),
            sim: SimDoc {
                dt: self.sim.dt,
                t_end: self.sim.t_end,
                seed: self.sim.seed,
                epsilon_floor: self.sim.epsilon_floor,
                record_stride: self.sim.record_stride,
            },
            upsilon,
            upsilon_grid,
            n_paths: self.n_paths,
            initial: [self.initial.x, self.initial.y],
            output_path: self.output_path.clone(),
            extinction_cutoff: Some(self.analysis.extinction_cutoff),
            se_margin: Some(self.analysis.se_margin),
        }
    }

    /// Canonical JSON form; `parse_config` of it yields an equal config.
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("config serializes")
    }
}
