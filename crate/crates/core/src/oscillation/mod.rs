//! Periodic orbits from a Poincaré return map, their stability, and the
//! self-excited / hidden classification.

mod omega;

pub use omega::{
    classify_cycle, default_epsilon, omega_limit, ClassifyOutcome, OmegaLimitKind, OmegaLimitOptions, OmegaLimitVerdict,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{dot, norm, ConvergenceCriterion, FlowStepper, IntegratorConfig, Mode, PiecewiseSmoothSystem, Sample};
use crate::error::{Error, Result};
use crate::models::StationarySet;

/// Hyperplane `normal · (x - anchor) = 0`, crossed in the direction where
/// `direction * normal · f > 0`. Points on it are parametrized by
/// `ρ = tangent · (x - anchor)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoincareSection {
    pub anchor: Vec<f64>,
    pub normal: Vec<f64>,
    pub tangent: Vec<f64>,
    pub direction: f64,
}

impl PoincareSection {
    /// Half-line `{x1 = 0, x2 > 0}`, crossed left to right.
    pub fn keldysh() -> Self {
        Self {
            anchor: vec![0.0, 0.0],
            normal: vec![1.0, 0.0],
            tangent: vec![0.0, 1.0],
            direction: 1.0,
        }
    }

    /// Signed distance in the admissible direction.
    pub fn height(&self, x: &[f64]) -> f64 {
        self.direction * x.iter().zip(&self.normal).zip(&self.anchor).map(|((xi, n), a)| n * (xi - a)).sum::<f64>()
    }

    pub fn radius(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.tangent).zip(&self.anchor).map(|((xi, t), a)| t * (xi - a)).sum()
    }

    pub fn point_at(&self, rho: f64) -> Vec<f64> {
        self.anchor.iter().zip(&self.tangent).map(|(a, t)| a + rho * t).collect()
    }

    fn reversed(&self) -> Self {
        Self {
            direction: -self.direction,
            ..self.clone()
        }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        if self.anchor.len() != dim || self.normal.len() != dim || self.tangent.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: self.anchor.len(),
            });
        }
        if norm(&self.normal) == 0.0 || norm(&self.tangent) == 0.0 || self.direction == 0.0 {
            return Err(Error::InvalidParameter {
                name: "section",
                reason: "normal, tangent and direction must be nonzero".into(),
            });
        }
        Ok(())
    }
}

/// How a flight from a section point ended.
#[derive(Debug, Clone, PartialEq)]
pub enum ReturnOutcome {
    Returned {
        point: Vec<f64>,
        time: f64,
        /// Accepted samples from the start up to and including `point`.
        orbit: Vec<Sample>,
    },
    /// Came to rest on the stationary set.
    Captured { time: f64 },
    Diverged { time: f64 },
    Horizon,
    Failed(String),
}

/// Locate `height = 0` inside a segment integrated from `x0` over `h`.
fn localize(stepper: &FlowStepper<'_>, section: &PoincareSection, mode: Mode, x0: &[f64], h: f64, tol: f64) -> Result<(f64, Vec<f64>)> {
    let (mut lo, mut hi) = (0.0, h);
    let mut flo = section.height(x0);
    let x_hi = stepper.substep_in(mode, x0, h)?;
    let mut fhi = section.height(&x_hi);
    if fhi < 0.0 {
        // substep disagrees with the committed endpoint; take a chord
        return Ok((h, x_hi));
    }
    let mut best = (h, x_hi);
    let mut last = 0i8;
    for iter in 0..200 {
        let mut tau = if iter % 4 == 3 {
            0.5 * (lo + hi)
        } else {
            hi - fhi * (hi - lo) / (fhi - flo)
        };
        if !(tau > lo && tau < hi) {
            tau = 0.5 * (lo + hi);
        }
        let x = stepper.substep_in(mode, x0, tau)?;
        let f = section.height(&x);
        if f.abs() <= tol || hi - lo <= 4.0 * f64::EPSILON * h.max(1.0) {
            return Ok((tau, x));
        }
        if f < 0.0 {
            lo = tau;
            flo = f;
            if last == -1 {
                fhi *= 0.5;
            }
            last = -1;
        } else {
            hi = tau;
            fhi = f;
            best = (tau, x);
            if last == 1 {
                flo *= 0.5;
            }
            last = 1;
        }
    }
    Ok(best)
}

/// Integrate from `x0` to the next admissible crossing of `section`.
pub fn first_return(
    system: &PiecewiseSmoothSystem,
    section: &PoincareSection,
    x0: &[f64],
    cfg: &IntegratorConfig,
    stop: Option<&ConvergenceCriterion<'_>>,
) -> Result<ReturnOutcome> {
    section.validate(system.dim())?;
    let mut stepper = FlowStepper::new(system, x0, cfg)?;
    let mut orbit = vec![Sample {
        t: 0.0,
        x: stepper.state().to_vec(),
        mode: stepper.mode(),
    }];
    let periodic = system.periodic_coordinates();
    let mut resting_since: Option<f64> = None;
    loop {
        if stepper.is_done() {
            return Ok(ReturnOutcome::Horizon);
        }
        let seg = match stepper.advance() {
            Ok(seg) => seg,
            Err(f) => return Ok(ReturnOutcome::Failed(f.reason)),
        };
        let h0 = section.height(&seg.x0);
        let h1 = section.height(&seg.x1);
        if h0 < 0.0 && h1 >= 0.0 {
            let (tau, x) = localize(&stepper, section, seg.mode, &seg.x0, seg.h(), cfg.event_tol)?;
            let time = seg.t0 + tau;
            orbit.push(Sample {
                t: time,
                x: x.clone(),
                mode: seg.mode,
            });
            return Ok(ReturnOutcome::Returned { point: x, time, orbit });
        }
        orbit.push(Sample {
            t: seg.t1,
            x: seg.x1,
            mode: seg.next_mode,
        });
        if norm(stepper.state()) > cfg.divergence_radius {
            return Ok(ReturnOutcome::Diverged { time: stepper.time() });
        }
        if let Some(c) = stop {
            let d = c.set.distance(stepper.state(), periodic);
            if d < c.dist_tol && norm(stepper.active_field()) < c.field_tol {
                let t0 = *resting_since.get_or_insert(stepper.time());
                if stepper.time() - t0 >= c.window {
                    return Ok(ReturnOutcome::Captured { time: stepper.time() });
                }
            } else {
                resting_since = None;
            }
        }
    }
}

/// Next same-direction crossing and the flight time.
pub fn return_map(
    system: &PiecewiseSmoothSystem,
    section: &PoincareSection,
    x0: &[f64],
    cfg: &IntegratorConfig,
) -> Result<(Vec<f64>, f64)> {
    section.validate(system.dim())?;
    let scale = 1.0 + norm(x0);
    if (section.height(x0)).abs() > 1e-8 * scale {
        return Err(Error::InvalidParameter {
            name: "x0",
            reason: "start is not on the section".into(),
        });
    }
    match first_return(system, section, x0, cfg, None)? {
        ReturnOutcome::Returned { point, time, .. } => Ok((point, time)),
        ReturnOutcome::Horizon => Err(Error::NoReturn("horizon reached".into())),
        ReturnOutcome::Diverged { .. } => Err(Error::NoReturn("trajectory diverged".into())),
        ReturnOutcome::Captured { .. } => Err(Error::NoReturn("captured by the stationary set".into())),
        ReturnOutcome::Failed(r) => Err(Error::NoReturn(format!("integrator failure: {r}"))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    Stable,
    Unstable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    SelfExcited,
    Hidden,
    Unclassified,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::SelfExcited => "self_excited",
            Classification::Hidden => "hidden",
            Classification::Unclassified => "unclassified",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitCycle {
    /// Section coordinate of the fixed point.
    pub radius: f64,
    pub anchor: Vec<f64>,
    pub period: f64,
    /// One period, starting and ending on the section.
    pub orbit: Vec<Vec<f64>>,
    /// Per-coordinate max |x_i| over the orbit.
    pub amplitude: Vec<f64>,
    pub stability: Stability,
    pub classification: Classification,
    pub return_map_multiplier: f64,
    /// Distance between the orbit's first and last samples.
    pub closure_error: f64,
}

impl LimitCycle {
    pub fn max_amplitude(&self) -> f64 {
        self.amplitude.iter().cloned().fold(0.0, f64::max)
    }

    /// Largest distance from `x` to the orbit polyline.
    pub fn distance(&self, x: &[f64]) -> f64 {
        polyline_distance(&self.orbit, x)
    }
}

pub(crate) fn polyline_distance(poly: &[Vec<f64>], x: &[f64]) -> f64 {
    if poly.len() == 1 {
        return dist(&poly[0], x);
    }
    let mut best = f64::INFINITY;
    for w in poly.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let ab: Vec<f64> = b.iter().zip(a).map(|(p, q)| p - q).collect();
        let ax: Vec<f64> = x.iter().zip(a).map(|(p, q)| p - q).collect();
        let ll = dot(&ab, &ab);
        let t = if ll > 0.0 { (dot(&ax, &ab) / ll).clamp(0.0, 1.0) } else { 0.0 };
        let d: f64 = ax.iter().zip(&ab).map(|(p, q)| (p - t * q).powi(2)).sum::<f64>().sqrt();
        best = best.min(d);
    }
    best
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt()
}

/// Seed scan and root-refinement settings for [`find_cycles`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CycleSearch {
    pub rho_min: f64,
    pub rho_max: f64,
    pub n_seeds: usize,
    pub radius_tol: f64,
    pub closure_tol: f64,
    /// Relative step of the central difference for the multiplier.
    pub fd_step: f64,
    /// Multipliers inside `[1 - band, 1 + band]` defer to the bracket sign.
    pub indeterminacy_band: f64,
    /// Refined brackets whose `|g|` at the root exceeds this are jumps, not
    /// fixed points.
    pub jump_tol: f64,
    /// Extra forward (stable) or backward (unstable) returns per cycle.
    pub polish_returns: usize,
}

impl Default for CycleSearch {
    fn default() -> Self {
        Self {
            rho_min: 0.01,
            rho_max: 3.0,
            n_seeds: 300,
            radius_tol: 1e-8,
            closure_tol: 1e-6,
            fd_step: 1e-6,
            indeterminacy_band: 0.05,
            jump_tol: 1e-5,
            polish_returns: 0,
        }
    }
}

impl CycleSearch {
    fn validate(&self) -> Result<()> {
        if self.rho_min.partial_cmp(&self.rho_max) != Some(std::cmp::Ordering::Less) || self.n_seeds < 2 {
            return Err(Error::InvalidParameter {
                name: "cycle_search",
                reason: "need rho_min < rho_max and at least two seeds".into(),
            });
        }
        Ok(())
    }

    pub fn seeds(&self) -> Vec<f64> {
        let n = self.n_seeds;
        (0..n)
            .map(|i| self.rho_min + (self.rho_max - self.rho_min) * i as f64 / (n - 1) as f64)
            .collect()
    }
}

/// Displacement `g(ρ) = ρ_return - ρ`. A start captured by the stationary set
/// counts as full contraction, `g = -ρ`; no return or divergence is `None`.
pub fn displacement(
    system: &PiecewiseSmoothSystem,
    section: &PoincareSection,
    stationary: &StationarySet,
    rho: f64,
    cfg: &IntegratorConfig,
) -> Result<Option<f64>> {
    let stop = ConvergenceCriterion::new(stationary);
    let stop = (!stationary.is_empty()).then_some(&stop);
    let x0 = section.point_at(rho);
    Ok(match first_return(system, section, &x0, cfg, stop)? {
        ReturnOutcome::Returned { point, .. } => Some(section.radius(&point) - rho),
        ReturnOutcome::Captured { .. } => Some(-rho),
        _ => None,
    })
}

/// Scan seeds, bracket sign changes of the displacement, bisect each to
/// `radius_tol`, and build the cycles. Roots are returned by increasing
/// radius, classification left as `Unclassified`.
pub fn find_cycles(
    system: &PiecewiseSmoothSystem,
    section: &PoincareSection,
    stationary: &StationarySet,
    search: &CycleSearch,
    cfg: &IntegratorConfig,
) -> Result<Vec<LimitCycle>> {
    search.validate()?;
    section.validate(system.dim())?;
    let seeds = search.seeds();
    let g: Vec<Option<f64>> = seeds
        .par_iter()
        .map(|&r| displacement(system, section, stationary, r, cfg))
        .collect::<Result<_>>()?;

    let mut brackets = Vec::new();
    for i in 0..seeds.len() - 1 {
        if let (Some(a), Some(b)) = (g[i], g[i + 1]) {
            if a == 0.0 {
                brackets.push((seeds[i], seeds[i], a, a));
            } else if a.signum() != b.signum() && b != 0.0 {
                brackets.push((seeds[i], seeds[i + 1], a, b));
            }
        }
    }

    let cycles: Vec<Option<LimitCycle>> = brackets
        .par_iter()
        .map(|&(lo, hi, glo, ghi)| refine(system, section, stationary, search, cfg, lo, hi, glo, ghi))
        .collect::<Result<_>>()?;
    Ok(cycles.into_iter().flatten().collect())
}

#[allow(clippy::too_many_arguments)]
fn refine(
    system: &PiecewiseSmoothSystem,
    section: &PoincareSection,
    stationary: &StationarySet,
    search: &CycleSearch,
    cfg: &IntegratorConfig,
    mut lo: f64,
    mut hi: f64,
    glo: f64,
    ghi: f64,
) -> Result<Option<LimitCycle>> {
    let sign_lo = glo.signum();
    while hi - lo > search.radius_tol {
        let mid = 0.5 * (lo + hi);
        match displacement(system, section, stationary, mid, cfg)? {
            Some(0.0) => {
                lo = mid;
                hi = mid;
            }
            Some(gm) if gm.signum() == sign_lo => lo = mid,
            Some(_) => hi = mid,
            None => return Ok(None),
        }
    }
    let mut rho = 0.5 * (lo + hi);
    let Some(g_root) = displacement(system, section, stationary, rho, cfg)? else {
        return Ok(None);
    };
    if g_root.abs() > search.jump_tol * (1.0 + rho.abs()) {
        return Ok(None);
    }
    // + on the inside, - outside: neighbours are pushed onto the root
    let bracket_stable = glo > 0.0 || ghi < 0.0;

    let h = search.fd_step * rho.abs().max(search.radius_tol);
    let multiplier = match (
        displacement(system, section, stationary, rho + h, cfg)?,
        displacement(system, section, stationary, rho - h, cfg)?,
    ) {
        (Some(gp), Some(gm)) => 1.0 + (gp - gm) / (2.0 * h),
        _ => f64::NAN,
    };
    let band = search.indeterminacy_band;
    let stability = if multiplier.is_finite() && (multiplier.abs() < 1.0 - band) {
        Stability::Stable
    } else if multiplier.is_finite() && multiplier.abs() > 1.0 + band {
        Stability::Unstable
    } else if bracket_stable {
        Stability::Stable
    } else {
        Stability::Unstable
    };

    if search.polish_returns > 0 {
        rho = polish(system, section, cfg, rho, stability, search.polish_returns, g_root.abs());
    }

    let x0 = section.point_at(rho);
    let (orbit, period) = match first_return(system, section, &x0, cfg, None)? {
        ReturnOutcome::Returned { orbit, time, .. } => (orbit, time),
        _ => return Ok(None),
    };
    let orbit: Vec<Vec<f64>> = orbit.into_iter().map(|s| s.x).collect();
    let n = system.dim();
    let amplitude = (0..n)
        .map(|c| orbit.iter().map(|x| x[c].abs()).fold(0.0, f64::max))
        .collect();
    let closure_error = dist(&orbit[0], orbit.last().unwrap());
    if closure_error > 10.0 * search.closure_tol.max(search.jump_tol * (1.0 + rho.abs())) {
        return Ok(None);
    }
    Ok(Some(LimitCycle {
        radius: rho,
        anchor: x0,
        period,
        orbit,
        amplitude,
        stability,
        classification: Classification::Unclassified,
        return_map_multiplier: multiplier,
        closure_error,
    }))
}

/// Iterate the return map in the direction in which the cycle attracts; keep
/// the result only when it reduces the displacement.
fn polish(
    system: &PiecewiseSmoothSystem,
    section: &PoincareSection,
    cfg: &IntegratorConfig,
    rho: f64,
    stability: Stability,
    returns: usize,
    g_abs: f64,
) -> f64 {
    let reversed;
    let (sys, sec) = match stability {
        Stability::Stable => (system, section.clone()),
        Stability::Unstable => {
            reversed = system.reversed();
            (&reversed, section.reversed())
        }
    };
    let mut r = rho;
    for _ in 0..returns {
        match return_map(sys, &sec, &sec.point_at(r), cfg) {
            Ok((x, _)) => r = sec.radius(&x),
            Err(_) => return rho,
        }
    }
    match return_map(sys, &sec, &sec.point_at(r), cfg) {
        Ok((x, _)) if (sec.radius(&x) - r).abs() < g_abs => r,
        _ => rho,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::SmoothField;

    /// r' = r(1 - r²), θ' = 1 in Cartesian form: stable unit cycle.
    fn hopf() -> PiecewiseSmoothSystem {
        PiecewiseSmoothSystem::smooth(SmoothField::new(2, |x, out| {
            let r2 = x[0] * x[0] + x[1] * x[1];
            out[0] = x[0] * (1.0 - r2) - x[1];
            out[1] = x[1] * (1.0 - r2) + x[0];
        }))
    }

    fn section() -> PoincareSection {
        PoincareSection {
            anchor: vec![0.0, 0.0],
            normal: vec![0.0, 1.0],
            tangent: vec![1.0, 0.0],
            direction: 1.0,
        }
    }

    #[test]
    fn return_map_fixed_point_on_unit_circle() {
        let cfg = IntegratorConfig::default();
        let (x, t) = return_map(&hopf(), &section(), &[1.0, 0.0], &cfg).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-8 && x[1].abs() < 1e-9, "{x:?}");
        assert!((t - std::f64::consts::TAU).abs() < 1e-7);
    }

    #[test]
    fn hopf_cycle_found_and_stable() {
        let cfg = IntegratorConfig::default().with_horizon(50.0);
        let search = CycleSearch {
            rho_min: 0.2,
            rho_max: 2.0,
            n_seeds: 10,
            ..CycleSearch::default()
        };
        let set = StationarySet::point(vec![0.0, 0.0]);
        let cycles = find_cycles(&hopf(), &section(), &set, &search, &cfg).unwrap();
        assert_eq!(cycles.len(), 1);
        let c = &cycles[0];
        assert!((c.radius - 1.0).abs() < 1e-7);
        assert_eq!(c.stability, Stability::Stable);
        // P'(1) = exp(-4π)
        assert!((c.return_map_multiplier - (-4.0 * std::f64::consts::PI).exp()).abs() < 1e-4);
        assert!((c.amplitude[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn reversed_polish_keeps_unstable_root() {
        let sys = PiecewiseSmoothSystem::smooth(SmoothField::new(2, |x, out| {
            let r2 = x[0] * x[0] + x[1] * x[1];
            out[0] = 0.1 * x[0] * (1.0 - r2) - x[1];
            out[1] = 0.1 * x[1] * (1.0 - r2) + x[0];
        }))
        .reversed();
        let cfg = IntegratorConfig::default().with_horizon(50.0);
        let search = CycleSearch {
            rho_min: 0.5,
            rho_max: 1.5,
            n_seeds: 4,
            jump_tol: 1e-4,
            polish_returns: 2,
            ..CycleSearch::default()
        };
        let cycles = find_cycles(&sys, &section().reversed(), &StationarySet::default(), &search, &cfg).unwrap();
        assert_eq!(cycles.len(), 1);
        assert_eq!(cycles[0].stability, Stability::Unstable);
        assert!((cycles[0].radius - 1.0).abs() < 1e-7);
    }

    #[test]
    fn start_off_section_rejected() {
        let cfg = IntegratorConfig::default();
        assert!(return_map(&hopf(), &section(), &[1.0, 0.5], &cfg).is_err());
    }
}
