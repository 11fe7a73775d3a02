use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use crate::dynamics::PiecewiseSmoothSystem;

/// Union of isolated equilibria and straight segments of equilibria.
///
/// Coordinates listed in `periodic` are compared modulo 2π, so a single point
/// stands for the whole family `p + 2πk e_c`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationarySet {
    #[serde(default)]
    pub points: Vec<Vec<f64>>,
    #[serde(default)]
    pub segments: Vec<(Vec<f64>, Vec<f64>)>,
    #[serde(default)]
    pub periodic: Vec<usize>,
}

fn wrap_angle(d: f64) -> f64 {
    let w = d - TAU * (d / TAU).round();
    // keep the representative in [-π, π]
    if w > PI {
        w - TAU
    } else if w < -PI {
        w + TAU
    } else {
        w
    }
}

impl StationarySet {
    pub fn point(p: Vec<f64>) -> Self {
        Self {
            points: vec![p],
            ..Self::default()
        }
    }

    pub fn segment(a: Vec<f64>, b: Vec<f64>) -> Self {
        Self {
            segments: vec![(a, b)],
            ..Self::default()
        }
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty() && self.segments.is_empty()
    }

    fn wrapped(&self, c: usize, wrap: &[usize]) -> bool {
        self.periodic.contains(&c) || wrap.contains(&c)
    }

    /// Difference `x - p` with periodic coordinates reduced to `[-π, π]`.
    fn diff(&self, x: &[f64], p: &[f64], wrap: &[usize]) -> Vec<f64> {
        x.iter()
            .zip(p)
            .enumerate()
            .map(|(c, (xi, pi))| {
                let d = xi - pi;
                if self.wrapped(c, wrap) {
                    wrap_angle(d)
                } else {
                    d
                }
            })
            .collect()
    }

    /// Euclidean distance to the nearest element of the set, with the
    /// coordinates in `wrap` (and the set's own periodic coordinates)
    /// compared modulo 2π. Infinite for an empty set.
    pub fn distance(&self, x: &[f64], wrap: &[usize]) -> f64 {
        let mut best = f64::INFINITY;
        for p in &self.points {
            let d = self.diff(x, p, wrap);
            best = best.min(d.iter().map(|v| v * v).sum::<f64>().sqrt());
        }
        for (a, b) in &self.segments {
            // x relative to a, in the periodic copy nearest to a
            let xa = self.diff(x, a, wrap);
            let ab: Vec<f64> = b.iter().zip(a).map(|(bi, ai)| bi - ai).collect();
            let ll: f64 = ab.iter().map(|v| v * v).sum();
            let t = if ll > 0.0 {
                (xa.iter().zip(&ab).map(|(p, q)| p * q).sum::<f64>() / ll).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let d: f64 = xa
                .iter()
                .zip(&ab)
                .map(|(p, q)| (p - t * q).powi(2))
                .sum::<f64>()
                .sqrt();
            best = best.min(d);
        }
        best
    }

    /// Probe anchors: every isolated point, plus segment endpoints and
    /// midpoints.
    pub fn anchors(&self) -> Vec<Vec<f64>> {
        let mut out = self.points.clone();
        for (a, b) in &self.segments {
            out.push(a.clone());
            out.push(a.iter().zip(b).map(|(p, q)| 0.5 * (p + q)).collect());
            out.push(b.clone());
        }
        out
    }

    /// Check `0 ∈ F(x)` at every anchor and at `n_interior` interior points of
    /// each segment.
    pub fn validate_against(&self, system: &PiecewiseSmoothSystem, n_interior: usize, tol: f64) -> bool {
        let check = |x: &[f64]| -> bool {
            match system.surface() {
                Some(surf) if surf.s(x).abs() <= tol => surf.filippov_contains_zero(x, tol),
                _ => system.eval(x).iter().all(|v| v.abs() <= tol),
            }
        };
        let mut probes = self.anchors();
        for (a, b) in &self.segments {
            for i in 1..=n_interior {
                let t = i as f64 / (n_interior + 1) as f64;
                probes.push(a.iter().zip(b).map(|(p, q)| p + t * (q - p)).collect());
            }
        }
        probes.iter().all(|p| check(p))
    }
}
