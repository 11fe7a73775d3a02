use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{polyline_distance, Classification, LimitCycle};
use crate::dynamics::{integrate, norm, ConvergenceCriterion, IntegratorConfig, PiecewiseSmoothSystem, TerminalStatus, Trajectory};
use crate::error::{Error, Result};
use crate::models::StationarySet;
use crate::verify::default_rays;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OmegaLimitOptions {
    /// Trailing window as a fraction of the trajectory duration.
    pub window_fraction: f64,
    pub min_window: f64,
    pub dist_tol: f64,
    /// Hausdorff distance below which the tail matches a cycle, relative to
    /// `1 + amplitude`.
    pub cycle_match_tol: f64,
}

impl Default for OmegaLimitOptions {
    fn default() -> Self {
        Self {
            window_fraction: 0.1,
            min_window: 5.0,
            dist_tol: 1e-6,
            cycle_match_tol: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "cycle")]
pub enum OmegaLimitKind {
    Stationary,
    /// Index into the `known_cycles` passed to [`omega_limit`].
    Cycle(usize),
    Unbounded,
    Undetermined,
}

impl OmegaLimitKind {
    pub fn as_str(self) -> &'static str {
        match self {
            OmegaLimitKind::Stationary => "stationary",
            OmegaLimitKind::Cycle(_) => "cycle",
            OmegaLimitKind::Unbounded => "unbounded",
            OmegaLimitKind::Undetermined => "undetermined",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmegaLimitVerdict {
    pub kind: OmegaLimitKind,
    pub terminal_status: TerminalStatus,
    pub window_start: f64,
    pub window_samples: usize,
    pub max_stationary_distance: f64,
    /// Hausdorff distance of the tail to the closest known cycle.
    pub best_cycle_distance: Option<f64>,
    pub final_norm: f64,
}

/// Symmetric Hausdorff distance between a trajectory tail and a cycle. The
/// cycle-to-tail direction is only used when the tail spans a full period.
fn tail_cycle_distance(tail: &[Vec<f64>], tail_span: f64, cycle: &LimitCycle) -> f64 {
    let forward = tail.iter().map(|x| polyline_distance(&cycle.orbit, x)).fold(0.0, f64::max);
    if tail_span >= cycle.period {
        let back = cycle.orbit.iter().map(|y| polyline_distance(tail, y)).fold(0.0, f64::max);
        forward.max(back)
    } else {
        forward
    }
}

/// ω-limit verdict from the trailing window of a finished trajectory.
pub fn omega_limit(
    trajectory: &Trajectory,
    stationary: &StationarySet,
    known_cycles: &[LimitCycle],
    wrap: &[usize],
    opts: &OmegaLimitOptions,
) -> OmegaLimitVerdict {
    let last = trajectory.last();
    let duration = trajectory.duration();
    let window = (opts.window_fraction * duration).max(opts.min_window);
    let start = last.t - window;
    let tail: Vec<&crate::dynamics::Sample> = trajectory.samples.iter().filter(|s| s.t >= start).collect();
    let max_stationary_distance = tail
        .iter()
        .map(|s| stationary.distance(&s.x, wrap))
        .fold(0.0, f64::max);
    let mut verdict = OmegaLimitVerdict {
        kind: OmegaLimitKind::Undetermined,
        terminal_status: trajectory.status,
        window_start: tail.first().map_or(last.t, |s| s.t),
        window_samples: tail.len(),
        max_stationary_distance,
        best_cycle_distance: None,
        final_norm: norm(&last.x),
    };
    match trajectory.status {
        TerminalStatus::Diverged => {
            verdict.kind = OmegaLimitKind::Unbounded;
            return verdict;
        }
        TerminalStatus::IntegratorFailure => return verdict,
        TerminalStatus::Converged => {
            verdict.kind = OmegaLimitKind::Stationary;
            verdict.max_stationary_distance = stationary.distance(&last.x, wrap);
            return verdict;
        }
        TerminalStatus::HorizonReached => {}
    }
    if max_stationary_distance < opts.dist_tol {
        verdict.kind = OmegaLimitKind::Stationary;
        return verdict;
    }
    let pts: Vec<Vec<f64>> = tail.iter().map(|s| s.x.clone()).collect();
    let span = last.t - verdict.window_start;
    let mut best: Option<(usize, f64)> = None;
    for (i, c) in known_cycles.iter().enumerate() {
        let d = tail_cycle_distance(&pts, span, c);
        if best.is_none_or(|(_, b)| d < b) {
            best = Some((i, d));
        }
    }
    if let Some((i, d)) = best {
        verdict.best_cycle_distance = Some(d);
        if d < opts.cycle_match_tol * (1.0 + known_cycles[i].max_amplitude()) {
            verdict.kind = OmegaLimitKind::Cycle(i);
        }
    }
    verdict
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyOutcome {
    pub classification: Classification,
    pub epsilon: f64,
    pub n_dirs: usize,
    pub probes: usize,
    pub reached_cycle: usize,
    pub stationary: usize,
    pub unbounded: usize,
    pub other_cycle: usize,
    pub undetermined: usize,
}

/// `1e-3` times the cycle's largest coordinate amplitude.
pub fn default_epsilon(cycle: &LimitCycle) -> f64 {
    1e-3 * cycle.max_amplitude()
}

/// Probe starts at distance `epsilon` from every stationary anchor in
/// `n_dirs` directions; the cycle (index `which` in `known`) is self-excited
/// if any probe reaches it, hidden if every probe settles elsewhere.
#[allow(clippy::too_many_arguments)]
pub fn classify_cycle(
    system: &PiecewiseSmoothSystem,
    known: &[LimitCycle],
    which: usize,
    stationary: &StationarySet,
    epsilon: f64,
    n_dirs: usize,
    cfg: &IntegratorConfig,
    opts: &OmegaLimitOptions,
) -> Result<ClassifyOutcome> {
    if stationary.is_empty() {
        return Err(Error::EmptyStationarySet);
    }
    if which >= known.len() {
        return Err(Error::InvalidParameter {
            name: "which",
            reason: format!("cycle index {which} out of range"),
        });
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "epsilon",
            reason: format!("must be finite and > 0, got {epsilon}"),
        });
    }
    let dim = system.dim();
    let dirs = default_rays(dim, n_dirs, cfg.seed);
    let mut starts = Vec::new();
    for a in stationary.anchors() {
        for d in &dirs {
            starts.push(a.iter().zip(d).map(|(p, q)| p + epsilon * q).collect::<Vec<f64>>());
        }
    }
    let stop = ConvergenceCriterion::new(stationary);
    let wrap = system.periodic_coordinates();
    let verdicts: Vec<OmegaLimitKind> = starts
        .par_iter()
        .map(|x0| {
            let tr = integrate(system, x0, cfg, Some(&stop))?;
            Ok(omega_limit(&tr, stationary, known, wrap, opts).kind)
        })
        .collect::<Result<_>>()?;
    let mut out = ClassifyOutcome {
        classification: Classification::Unclassified,
        epsilon,
        n_dirs: dirs.len(),
        probes: verdicts.len(),
        reached_cycle: 0,
        stationary: 0,
        unbounded: 0,
        other_cycle: 0,
        undetermined: 0,
    };
    for v in &verdicts {
        match v {
            OmegaLimitKind::Cycle(i) if *i == which => out.reached_cycle += 1,
            OmegaLimitKind::Cycle(_) => out.other_cycle += 1,
            OmegaLimitKind::Stationary => out.stationary += 1,
            OmegaLimitKind::Unbounded => out.unbounded += 1,
            OmegaLimitKind::Undetermined => out.undetermined += 1,
        }
    }
    out.classification = if out.reached_cycle > 0 {
        Classification::SelfExcited
    } else if out.undetermined == 0 {
        Classification::Hidden
    } else {
        Classification::Unclassified
    };
    Ok(out)
}
