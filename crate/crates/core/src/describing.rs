//! Single-harmonic balance for the Keldysh model, on the velocity variable
//! `σ = x2 / J` of the oscillator `J ÿ + μ ẏ + k y + φ(ẏ) = 0`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::dynamics::IntegratorConfig;
use crate::error::{positive, Error, Result};
use crate::models::{build_keldysh, KeldyshParams};
use crate::oscillation::{find_cycles, CycleSearch, LimitCycle, PoincareSection, Stability};

/// `(8/π) √(2Φκ/3)`: two balance solutions exist iff `μ < -threshold`.
pub fn keldysh_threshold(friction: f64, damper: f64) -> Result<f64> {
    positive("friction", friction)?;
    positive("damper", damper)?;
    Ok(8.0 / PI * (2.0 * friction * damper / 3.0).sqrt())
}

/// Equivalent gain `N(B) = 4Φ/(πB) + 8κB/(3π)` of `(Φ + κσ²) sign σ` driven by
/// `σ = B sin θ`.
pub fn describing_gain(friction: f64, damper: f64, amplitude: f64) -> Result<f64> {
    if !(amplitude > 0.0 && amplitude.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "amplitude",
            reason: format!("must be finite and > 0, got {amplitude}"),
        });
    }
    if !(friction >= 0.0 && damper >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "friction/damper",
            reason: "must be nonnegative".into(),
        });
    }
    Ok(4.0 * friction / (PI * amplitude) + 8.0 * damper * amplitude / (3.0 * PI))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HbPrediction {
    pub cycle_count: usize,
    /// `B₋ <= B₊`, amplitudes of σ; empty when no cycle is predicted.
    pub velocity_amplitudes: Vec<f64>,
    pub frequency: f64,
    pub threshold: f64,
}

impl HbPrediction {
    /// Semi-axes `(B/ω, J·B)` of the predicted orbits in `(x1, x2)`.
    pub fn ellipses(&self, p: &KeldyshParams) -> Vec<(f64, f64)> {
        self.velocity_amplitudes
            .iter()
            .map(|b| (b / self.frequency, p.inertia * b))
            .collect()
    }
}

/// Roots of `(8κ/(3π)) B² + μ B + 4Φ/π = 0`.
pub fn hb_predict(p: &KeldyshParams) -> Result<HbPrediction> {
    p.validate()?;
    let threshold = keldysh_threshold(p.friction, p.damper)?;
    let frequency = (p.stiffness / p.inertia).sqrt();
    let a = 8.0 * p.damper / (3.0 * PI);
    let b = p.mu;
    let c = 4.0 * p.friction / PI;
    let disc = b * b - 4.0 * a * c;
    let mut amps = Vec::new();
    if p.mu < 0.0 && disc > 0.0 {
        let sq = disc.sqrt();
        // b < 0: -b + sq has no cancellation; the small root from Vieta
        let big = (-b + sq) / (2.0 * a);
        let small = c / (a * big);
        amps = vec![small, big];
    }
    Ok(HbPrediction {
        cycle_count: amps.len(),
        velocity_amplitudes: amps,
        frequency,
        threshold,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HbVerdict {
    Agree,
    /// Harmonic balance predicts more cycles than simulation finds.
    HbFalsePositive,
    HbFalseNegative,
}

impl HbVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            HbVerdict::Agree => "agree",
            HbVerdict::HbFalsePositive => "hb_false_positive",
            HbVerdict::HbFalseNegative => "hb_false_negative",
        }
    }

    /// Compare predicted and simulated cycle counts.
    pub fn from_counts(predicted: usize, simulated: usize) -> Self {
        match predicted.cmp(&simulated) {
            std::cmp::Ordering::Equal => HbVerdict::Agree,
            std::cmp::Ordering::Greater => HbVerdict::HbFalsePositive,
            std::cmp::Ordering::Less => HbVerdict::HbFalseNegative,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HbComparison {
    pub params: KeldyshParams,
    pub prediction: HbPrediction,
    pub simulated_count: usize,
    pub simulated_stability: Vec<Stability>,
    /// Simulated x2 amplitudes, increasing.
    pub simulated_x2_amplitudes: Vec<f64>,
    /// `simulated x2 amplitude / (J·B)`, paired by rank when counts match.
    pub amplitude_ratios: Vec<f64>,
    pub verdict: HbVerdict,
    #[serde(skip)]
    pub cycles: Vec<LimitCycle>,
}

/// Harmonic-balance prediction against the cycles found by simulation.
pub fn hb_vs_simulation(
    p: &KeldyshParams,
    section: &PoincareSection,
    search: &CycleSearch,
    cfg: &IntegratorConfig,
) -> Result<HbComparison> {
    let prediction = hb_predict(p)?;
    let model = build_keldysh(p)?;
    let cycles = find_cycles(&model.system, section, &model.stationary, search, cfg)?;
    let mut x2: Vec<f64> = cycles.iter().map(|c| c.amplitude[1]).collect();
    x2.sort_by(f64::total_cmp);
    let amplitude_ratios = if x2.len() == prediction.cycle_count {
        x2.iter()
            .zip(&prediction.velocity_amplitudes)
            .map(|(a, b)| a / (p.inertia * b))
            .collect()
    } else {
        Vec::new()
    };
    Ok(HbComparison {
        params: *p,
        verdict: HbVerdict::from_counts(prediction.cycle_count, cycles.len()),
        simulated_count: cycles.len(),
        simulated_stability: cycles.iter().map(|c| c.stability).collect(),
        simulated_x2_amplitudes: x2,
        amplitude_ratios,
        prediction,
        cycles,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_values() {
        let t = keldysh_threshold(1.0, 1.0).unwrap();
        assert!((t - 2.07920).abs() < 1e-5);
        assert!((keldysh_threshold(0.2, 1.0).unwrap() - 0.929843).abs() < 1e-6);
        assert!(keldysh_threshold(0.0, 1.0).is_err());
        assert!(keldysh_threshold(1.0, -1.0).is_err());
    }

    #[test]
    fn gain_minimum_is_threshold() {
        let (phi, kappa) = (0.7f64, 1.3f64);
        let b_star = (3.0 * phi / (2.0 * kappa)).sqrt();
        let n = describing_gain(phi, kappa, b_star).unwrap();
        assert!((n - keldysh_threshold(phi, kappa).unwrap()).abs() < 1e-12);
        assert!(describing_gain(phi, kappa, 0.0).is_err());
        let cubic = describing_gain(0.0, 3.0 * PI / 8.0, 2.5).unwrap();
        assert!((cubic - 2.5).abs() < 1e-12);
    }

    #[test]
    fn prediction_two_cycle_regime() {
        let p = KeldyshParams::unit(0.2, -1.2987);
        let hb = hb_predict(&p).unwrap();
        assert_eq!(hb.cycle_count, 2);
        assert!((hb.velocity_amplitudes[0] - 0.2309).abs() < 1e-4);
        assert!((hb.velocity_amplitudes[1] - 1.2991).abs() < 1e-4);
        assert_eq!(hb.frequency, 1.0);
    }

    #[test]
    fn no_prediction_below_threshold() {
        assert_eq!(hb_predict(&KeldyshParams::unit(0.2, -0.9)).unwrap().cycle_count, 0);
        assert_eq!(hb_predict(&KeldyshParams::unit(0.2, 0.0)).unwrap().cycle_count, 0);
        assert_eq!(hb_predict(&KeldyshParams::unit(0.2, 2.0)).unwrap().cycle_count, 0);
    }

    #[test]
    fn verdict_rule() {
        assert_eq!(HbVerdict::from_counts(2, 2), HbVerdict::Agree);
        assert_eq!(HbVerdict::from_counts(2, 0), HbVerdict::HbFalsePositive);
        assert_eq!(HbVerdict::from_counts(0, 2), HbVerdict::HbFalseNegative);
    }
}
