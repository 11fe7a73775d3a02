use serde::{Deserialize, Serialize};

use super::certificate::TheoremVariant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionStatus {
    Passed,
    Violated,
    Inconclusive,
}

/// Quantity a witness value refers to; re-evaluating it at `state` reproduces
/// `value`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessQuantity {
    /// `V(state)`.
    Value,
    /// `dV/dt` along the active field at `state`.
    LieDerivative,
    /// `V(state) + σ²` for the periodic coordinate.
    ValuePlusSigmaSquared,
    /// `V(state + 2π e_σ) - V(state)`.
    PeriodShift,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub condition: String,
    pub state: Vec<f64>,
    pub quantity: WitnessQuantity,
    pub value: f64,
    /// Bound that `value` violates (previous V along a trajectory, growth
    /// threshold along a ray, ...).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckMethod {
    Sampled,
    RadialProbe,
    TrajectorySampled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionResult {
    pub id: String,
    pub description: String,
    pub status: ConditionStatus,
    pub method: CheckMethod,
    /// Number of probes that violated the condition (witnesses are capped).
    pub violations: usize,
    pub witnesses: Vec<Witness>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ProbeStats {
    pub samples: usize,
    pub box_lo: Vec<f64>,
    pub box_hi: Vec<f64>,
    pub rays: usize,
    pub ray_min_radius: f64,
    pub ray_max_radius: f64,
    pub trajectories: usize,
    pub trajectory_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub theorem: TheoremVariant,
    pub conditions: Vec<ConditionResult>,
    pub stats: ProbeStats,
    pub notes: Vec<String>,
}

impl VerificationReport {
    pub fn condition(&self, id: &str) -> Option<&ConditionResult> {
        self.conditions.iter().find(|c| c.id == id)
    }

    pub fn status(&self, id: &str) -> Option<ConditionStatus> {
        self.condition(id).map(|c| c.status)
    }

    /// Violated if any condition is violated, else inconclusive if any is
    /// inconclusive, else passed.
    pub fn overall(&self) -> ConditionStatus {
        if self.conditions.iter().any(|c| c.status == ConditionStatus::Violated) {
            ConditionStatus::Violated
        } else if self.conditions.iter().any(|c| c.status == ConditionStatus::Inconclusive) {
            ConditionStatus::Inconclusive
        } else {
            ConditionStatus::Passed
        }
    }

    pub fn all_passed(&self) -> bool {
        self.overall() == ConditionStatus::Passed
    }
}

pub(crate) struct ConditionBuilder {
    id: &'static str,
    description: &'static str,
    method: CheckMethod,
    max_witnesses: usize,
    violations: usize,
    witnesses: Vec<Witness>,
}

impl ConditionBuilder {
    pub fn new(id: &'static str, description: &'static str, method: CheckMethod, max_witnesses: usize) -> Self {
        Self {
            id,
            description,
            method,
            max_witnesses,
            violations: 0,
            witnesses: Vec::new(),
        }
    }

    pub fn violate(&mut self, state: Vec<f64>, quantity: WitnessQuantity, value: f64, reference: Option<f64>) {
        self.violations += 1;
        if self.witnesses.len() < self.max_witnesses {
            self.witnesses.push(Witness {
                condition: self.id.to_string(),
                state,
                quantity,
                value,
                reference,
            });
        }
    }

    pub fn finish(self) -> ConditionResult {
        let status = if self.violations > 0 {
            ConditionStatus::Violated
        } else {
            ConditionStatus::Passed
        };
        self.finish_with(status)
    }

    pub fn finish_with(self, status: ConditionStatus) -> ConditionResult {
        ConditionResult {
            id: self.id.to_string(),
            description: self.description.to_string(),
            status,
            method: self.method,
            violations: self.violations,
            witnesses: self.witnesses,
        }
    }
}
