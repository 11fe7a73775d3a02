use serde::{Deserialize, Serialize};

use super::filippov::Mode;
use crate::error::{Error, Result};
use crate::models::StationarySet;

/// Step-size control, event location and termination settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub horizon: f64,
    /// Events are located to `|s| <= event_tol`.
    pub event_tol: f64,
    pub divergence_radius: f64,
    /// Sliding is left when the Filippov weight exits `[δ, 1-δ]`.
    pub sliding_exit_margin: f64,
    /// Size of the seeded perturbation applied at degenerate tangencies.
    pub tangency_perturbation: f64,
    pub seed: u64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 1e-11,
            max_step: 0.1,
            horizon: 200.0,
            event_tol: 1e-10,
            divergence_radius: 1e6,
            sliding_exit_margin: 1e-9,
            tangency_perturbation: 1e-8,
            seed: 0,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("rel_tol", self.rel_tol),
            ("abs_tol", self.abs_tol),
            ("max_step", self.max_step),
            ("horizon", self.horizon),
            ("event_tol", self.event_tol),
            ("divergence_radius", self.divergence_radius),
            ("sliding_exit_margin", self.sliding_exit_margin),
            ("tangency_perturbation", self.tangency_perturbation),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be finite and > 0, got {v}"),
                });
            }
        }
        if self.sliding_exit_margin >= 0.5 {
            return Err(Error::InvalidParameter {
                name: "sliding_exit_margin",
                reason: "must be < 0.5".into(),
            });
        }
        Ok(())
    }

    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn with_tolerances(mut self, rel_tol: f64, abs_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self.abs_tol = abs_tol;
        self
    }
}

/// Stop integration once the state has rested on the stationary set.
#[derive(Debug, Clone, Copy)]
pub struct ConvergenceCriterion<'a> {
    pub set: &'a StationarySet,
    pub dist_tol: f64,
    pub field_tol: f64,
    /// Trailing time window over which both conditions must hold.
    pub window: f64,
}

impl<'a> ConvergenceCriterion<'a> {
    pub fn new(set: &'a StationarySet) -> Self {
        Self {
            set,
            dist_tol: 1e-6,
            field_tol: 1e-8,
            window: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub x: Vec<f64>,
    pub mode: Mode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Crossing,
    SlidingEntry,
    SlidingExit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: f64,
    pub kind: EventKind,
    pub x: Vec<f64>,
    /// Value of the surface function at the located point.
    pub s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminalStatus {
    HorizonReached,
    Converged,
    Diverged,
    IntegratorFailure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub events: Vec<Event>,
    pub status: TerminalStatus,
    /// Diagnostic for `IntegratorFailure`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

impl Trajectory {
    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectory always holds the initial sample")
    }

    pub fn duration(&self) -> f64 {
        self.last().t - self.samples[0].t
    }

    pub fn states(&self) -> impl Iterator<Item = &[f64]> {
        self.samples.iter().map(|s| s.x.as_slice())
    }
}
