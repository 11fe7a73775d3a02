//! Sampling audits of the hypotheses of the Barbashin–Krasovsky, Leonov
//! (cylindrical phase space) and Gelig–Leonov (differential inclusion)
//! global-stability theorems.
//!
//! Every check is a semi-decision: a pass means no counterexample was found at
//! the probe resolution recorded in [`ProbeStats`].

mod certificate;
mod report;
mod sampling;

pub use certificate::{Certificate, CertificateForm, TheoremVariant};
pub use report::{
    CheckMethod, ConditionResult, ConditionStatus, ProbeStats, VerificationReport, Witness, WitnessQuantity,
};
pub use sampling::{default_rays, halton_box};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{integrate, lie_derivative, norm, ConvergenceCriterion, IntegratorConfig, PiecewiseSmoothSystem, Trajectory};
use crate::error::{Error, Result};
use crate::models::{KeldyshParams, StationarySet};
use report::ConditionBuilder;

/// Probe domain and tolerances shared by all checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeConfig {
    pub box_lo: Vec<f64>,
    pub box_hi: Vec<f64>,
    pub n_samples: usize,
    /// Explicit ray directions; generated when empty.
    pub rays: Vec<Vec<f64>>,
    pub n_rays: usize,
    pub r_max: f64,
    pub n_radii: usize,
    /// `V(R_max d)` must exceed `growth_factor * max V(box corner)`.
    pub growth_factor: f64,
    /// Radius of the excluded ball around the equilibrium.
    pub ball_tol: f64,
    pub nonincrease_abs: f64,
    pub nonincrease_rel: f64,
    /// A window is "V-constant" when `max V - min V <= constancy_tol (1 + |V|)`.
    pub constancy_tol: f64,
    pub constancy_window: f64,
    /// Minimum displacement inside a V-constant window to count as motion.
    pub motion_tol: f64,
    /// States closer than this to the stationary set count as stationary.
    pub stationary_tol: f64,
    pub periodic_tol: f64,
    pub max_witnesses: usize,
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            box_lo: vec![-2.0, -2.0],
            box_hi: vec![2.0, 2.0],
            n_samples: 10_000,
            rays: Vec::new(),
            n_rays: 64,
            r_max: 1e4,
            n_radii: 48,
            growth_factor: 10.0,
            ball_tol: 1e-6,
            nonincrease_abs: 1e-8,
            nonincrease_rel: 1e-8,
            constancy_tol: 1e-12,
            constancy_window: 1.0,
            motion_tol: 1e-6,
            stationary_tol: 1e-3,
            periodic_tol: 1e-9,
            max_witnesses: 8,
            seed: 0,
        }
    }
}

impl ProbeConfig {
    pub fn with_box(mut self, lo: Vec<f64>, hi: Vec<f64>) -> Self {
        self.box_lo = lo;
        self.box_hi = hi;
        self
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.box_lo.len() != dim || self.box_hi.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: self.box_lo.len().min(self.box_hi.len()),
            });
        }
        if self.box_lo.iter().zip(&self.box_hi).any(|(l, h)| l.partial_cmp(h) != Some(std::cmp::Ordering::Less)) {
            return Err(Error::InvalidParameter {
                name: "box",
                reason: "box_lo must be strictly below box_hi".into(),
            });
        }
        Ok(())
    }

    fn rays_for(&self, dim: usize) -> Vec<Vec<f64>> {
        if self.rays.is_empty() {
            default_rays(dim, self.n_rays, self.seed)
        } else {
            self.rays
                .iter()
                .map(|r| {
                    let n = norm(r);
                    r.iter().map(|v| v / n).collect()
                })
                .collect()
        }
    }

    fn corners(&self) -> Vec<Vec<f64>> {
        let n = self.box_lo.len();
        (0..1usize << n)
            .map(|mask| {
                (0..n)
                    .map(|c| if mask >> c & 1 == 1 { self.box_hi[c] } else { self.box_lo[c] })
                    .collect()
            })
            .collect()
    }
}

fn checked(v: f64, what: &'static str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite(what))
    }
}

/// Radial unboundedness probe of `w` along rays from the origin: values at
/// geometrically spaced radii from the box-corner radius to `r_max` must be
/// strictly increasing and end above the growth threshold.
fn radial_probe<W>(
    id: &'static str,
    description: &'static str,
    quantity: WitnessQuantity,
    w: W,
    probe: &ProbeConfig,
    dim: usize,
    stats: &mut ProbeStats,
) -> Result<ConditionResult>
where
    W: Fn(&[f64]) -> f64,
{
    let corners = probe.corners();
    let r0 = corners.iter().map(|c| norm(c)).fold(0.0, f64::max);
    let mut corner_max = f64::NEG_INFINITY;
    for c in &corners {
        corner_max = corner_max.max(checked(w(c), "certificate at box corner")?);
    }
    let threshold = probe.growth_factor * corner_max.max(0.0);
    let rays = probe.rays_for(dim);
    let n = probe.n_radii.max(2);
    let ratio = (probe.r_max / r0).powf(1.0 / (n - 1) as f64);
    let mut cond = ConditionBuilder::new(id, description, CheckMethod::RadialProbe, probe.max_witnesses);
    for d in &rays {
        let mut prev = f64::NEG_INFINITY;
        let mut monotone = true;
        let mut last = (Vec::new(), 0.0);
        let mut r = r0;
        for _ in 0..n {
            let x: Vec<f64> = d.iter().map(|c| c * r).collect();
            let v = checked(w(&x), "certificate on ray")?;
            if v <= prev && monotone {
                monotone = false;
                cond.violate(x.clone(), quantity, v, Some(prev));
            }
            prev = v;
            last = (x, v);
            r *= ratio;
        }
        if monotone && last.1 <= threshold {
            cond.violate(last.0, quantity, last.1, Some(threshold));
        }
    }
    stats.rays = rays.len();
    stats.ray_min_radius = r0;
    stats.ray_max_radius = probe.r_max;
    Ok(cond.finish())
}

/// Check `V(x)` nonincreasing along each trajectory, within slack.
fn nonincrease_along(
    id: &'static str,
    description: &'static str,
    cert: &Certificate,
    trajectories: &[Trajectory],
    probe: &ProbeConfig,
) -> Result<ConditionResult> {
    let mut cond = ConditionBuilder::new(id, description, CheckMethod::TrajectorySampled, probe.max_witnesses);
    for tr in trajectories {
        let mut prev = checked(cert.value(&tr.samples[0].x), "certificate along trajectory")?;
        for s in &tr.samples[1..] {
            let v = checked(cert.value(&s.x), "certificate along trajectory")?;
            let slack = probe.nonincrease_abs + probe.nonincrease_rel * prev.abs();
            if v > prev + slack {
                cond.violate(s.x.clone(), WitnessQuantity::Value, v, Some(prev));
            }
            prev = v;
        }
    }
    if trajectories.is_empty() {
        return Ok(cond.finish_with(ConditionStatus::Inconclusive));
    }
    Ok(cond.finish())
}

/// Windows of near-constant V must not contain motion away from the
/// stationary set.
fn constancy_along(
    id: &'static str,
    description: &'static str,
    cert: &Certificate,
    trajectories: &[Trajectory],
    stationary: &StationarySet,
    wrap: &[usize],
    probe: &ProbeConfig,
) -> ConditionResult {
    let mut cond = ConditionBuilder::new(id, description, CheckMethod::TrajectorySampled, probe.max_witnesses);
    for tr in trajectories {
        let vals: Vec<f64> = tr.samples.iter().map(|s| cert.value(&s.x)).collect();
        let dist: Vec<f64> = tr.samples.iter().map(|s| stationary.distance(&s.x, wrap)).collect();
        let n = tr.samples.len();
        let mut j = 0;
        let mut i = 0;
        while i < n {
            if j < i {
                j = i;
            }
            while j + 1 < n && tr.samples[j].t - tr.samples[i].t < probe.constancy_window {
                j += 1;
            }
            if tr.samples[j].t - tr.samples[i].t < probe.constancy_window {
                break;
            }
            let window = i..=j;
            let (lo, hi) = vals[window.clone()]
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
            let constant = hi - lo <= probe.constancy_tol * (1.0 + vals[i].abs());
            if constant {
                let moved = tr.samples[window.clone()]
                    .iter()
                    .map(|s| {
                        s.x.iter()
                            .zip(&tr.samples[i].x)
                            .map(|(a, b)| (a - b).powi(2))
                            .sum::<f64>()
                            .sqrt()
                    })
                    .fold(0.0, f64::max);
                let near = dist[window.clone()].iter().any(|d| *d <= probe.stationary_tol);
                if moved > probe.motion_tol && !near {
                    cond.violate(tr.samples[i].x.clone(), WitnessQuantity::Value, vals[i], Some(hi));
                    // skip past this window so one stretch yields one witness
                    i = j;
                }
            }
            i += 1;
        }
    }
    if trajectories.is_empty() {
        return cond.finish_with(ConditionStatus::Inconclusive);
    }
    cond.finish()
}

fn trajectory_stats(stats: &mut ProbeStats, trajectories: &[Trajectory]) {
    stats.trajectories = trajectories.len();
    stats.trajectory_samples = trajectories.iter().map(|t| t.samples.len()).sum();
}

/// Barbashin–Krasovsky hypotheses (i) positivity, (ii) negative Lie
/// derivative off the equilibrium, (iii) radial unboundedness.
pub fn check_barbashin_krasovsky(
    system: &PiecewiseSmoothSystem,
    cert: &Certificate,
    probe: &ProbeConfig,
) -> Result<VerificationReport> {
    if system.surface().is_some() {
        return Err(Error::InvalidParameter {
            name: "system",
            reason: "Barbashin–Krasovsky check requires a smooth system".into(),
        });
    }
    let dim = system.dim();
    probe.validate(dim)?;
    let samples = halton_box(&probe.box_lo, &probe.box_hi, probe.n_samples, probe.seed);
    let origin = vec![0.0; dim];

    let mut c1 = ConditionBuilder::new("i", "V(x) > 0 for x != 0 and V(0) = 0", CheckMethod::Sampled, probe.max_witnesses);
    let v0 = checked(cert.value(&origin), "certificate at origin")?;
    if v0.abs() > 1e-12 {
        c1.violate(origin.clone(), WitnessQuantity::Value, v0, Some(0.0));
    }
    let mut c2 = ConditionBuilder::new("ii", "dV/dt < 0 for x != 0", CheckMethod::Sampled, probe.max_witnesses);

    let evals: Vec<Result<(f64, f64)>> = samples
        .par_iter()
        .map(|x| {
            let v = checked(cert.value(x), "certificate")?;
            let ld = lie_derivative(system, |y| cert.gradient(y), x, 1e-10)?.value;
            Ok((v, checked(ld, "lie derivative")?))
        })
        .collect();
    for (x, ev) in samples.iter().zip(evals) {
        let (v, ld) = ev?;
        if norm(x) <= probe.ball_tol {
            continue;
        }
        if v <= 0.0 {
            c1.violate(x.clone(), WitnessQuantity::Value, v, Some(0.0));
        }
        if ld >= 0.0 {
            c2.violate(x.clone(), WitnessQuantity::LieDerivative, ld, Some(0.0));
        }
    }
    let mut stats = ProbeStats {
        samples: samples.len(),
        box_lo: probe.box_lo.clone(),
        box_hi: probe.box_hi.clone(),
        ..ProbeStats::default()
    };
    let c3 = radial_probe(
        "iii",
        "V(x) -> +inf as |x| -> +inf",
        WitnessQuantity::Value,
        |x| cert.value(x),
        probe,
        dim,
        &mut stats,
    )?;
    Ok(VerificationReport {
        theorem: TheoremVariant::BarbashinKrasovsky,
        conditions: vec![c1.finish(), c2.finish(), c3],
        stats,
        notes: vec!["radial unboundedness is probed along finitely many rays, not proved".into()],
    })
}

/// Leonov hypotheses for a cylindrical phase space: (i) V periodic in σ,
/// (ii) V nonincreasing along solutions, (iii) V constant only on equilibria,
/// (iv) V + σ² radially unbounded.
pub fn check_leonov_cylindrical(
    system: &PiecewiseSmoothSystem,
    cert: &Certificate,
    stationary: &StationarySet,
    trajectories: &[Trajectory],
    probe: &ProbeConfig,
) -> Result<VerificationReport> {
    let periodic = system.periodic_coordinates();
    let Some(&sigma) = periodic.first() else {
        return Err(Error::MissingPeriodicCoordinate);
    };
    if !stationary.segments.is_empty() {
        return Err(Error::InvalidParameter {
            name: "stationary",
            reason: "cylindrical check requires isolated equilibria".into(),
        });
    }
    let dim = system.dim();
    probe.validate(dim)?;
    let samples = halton_box(&probe.box_lo, &probe.box_hi, probe.n_samples, probe.seed);

    let mut c1 = ConditionBuilder::new("i", "V(z, σ + 2π) = V(z, σ)", CheckMethod::Sampled, probe.max_witnesses);
    for x in &samples {
        let v = checked(cert.value(x), "certificate")?;
        let mut y = x.clone();
        y[sigma] += std::f64::consts::TAU;
        let shift = checked(cert.value(&y), "certificate")? - v;
        if shift.abs() > probe.periodic_tol * (1.0 + v.abs()) {
            c1.violate(x.clone(), WitnessQuantity::PeriodShift, shift, Some(0.0));
        }
    }
    let c2 = nonincrease_along("ii", "V nonincreasing along every solution", cert, trajectories, probe)?;
    let c3 = constancy_along(
        "iii",
        "V constant along a solution only at an equilibrium",
        cert,
        trajectories,
        stationary,
        periodic,
        probe,
    );
    let mut stats = ProbeStats {
        samples: samples.len(),
        box_lo: probe.box_lo.clone(),
        box_hi: probe.box_hi.clone(),
        ..ProbeStats::default()
    };
    trajectory_stats(&mut stats, trajectories);
    let c4 = radial_probe(
        "iv",
        "V + σ² -> +inf as |z| + |σ| -> +inf",
        WitnessQuantity::ValuePlusSigmaSquared,
        |x| cert.value(x) + x[sigma] * x[sigma],
        probe,
        dim,
        &mut stats,
    )?;
    Ok(VerificationReport {
        theorem: TheoremVariant::LeonovCylindrical,
        conditions: vec![c1.finish(), c2, c3, c4],
        stats,
        notes: vec!["conditions (ii) and (iii) are trajectory-sampled on the supplied solutions".into()],
    })
}

/// Gelig–Leonov hypotheses for a differential inclusion: (i) V nonincreasing
/// along every Filippov solution, (ii) V constant only on stationary
/// solutions, (iii) V radially unbounded.
pub fn check_gelig_leonov(
    system: &PiecewiseSmoothSystem,
    cert: &Certificate,
    stationary: &StationarySet,
    trajectories: &[Trajectory],
    probe: &ProbeConfig,
) -> Result<VerificationReport> {
    let dim = system.dim();
    probe.validate(dim)?;
    let wrap = system.periodic_coordinates();
    let c1 = nonincrease_along(
        "i",
        "V(x(t)) nonincreasing for every solution, sliding included",
        cert,
        trajectories,
        probe,
    )?;
    let c2 = constancy_along(
        "ii",
        "V(x(t)) = const only for stationary solutions",
        cert,
        trajectories,
        stationary,
        wrap,
        probe,
    );
    let mut stats = ProbeStats {
        box_lo: probe.box_lo.clone(),
        box_hi: probe.box_hi.clone(),
        ..ProbeStats::default()
    };
    trajectory_stats(&mut stats, trajectories);
    let c3 = radial_probe(
        "iii",
        "V(x) -> +inf as |x| -> +inf",
        WitnessQuantity::Value,
        |x| cert.value(x),
        probe,
        dim,
        &mut stats,
    )?;
    Ok(VerificationReport {
        theorem: TheoremVariant::GeligLeonov,
        conditions: vec![c1, c2, c3],
        stats,
        notes: vec![
            "conditions (i) and (ii) are trajectory-sampled on the supplied solutions".into(),
            "condition (ii) concerns solutions bounded on the whole real line; only forward trajectories are examined".into(),
        ],
    })
}

/// Uniform `n x n` grid of starts over a 2D box.
pub fn start_grid(lo: &[f64], hi: &[f64], n: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(n * n);
    let frac = |i: usize| if n == 1 { 0.5 } else { i as f64 / (n - 1) as f64 };
    for i in 0..n {
        for j in 0..n {
            out.push(vec![
                lo[0] + frac(i) * (hi[0] - lo[0]),
                lo[1] + frac(j) * (hi[1] - lo[1]),
            ]);
        }
    }
    out
}

/// Integrate every start in parallel, stopping at rest on the stationary
/// set. Output order follows `starts`.
pub fn simulate_starts(
    system: &PiecewiseSmoothSystem,
    stationary: &StationarySet,
    starts: &[Vec<f64>],
    cfg: &IntegratorConfig,
) -> Result<Vec<Trajectory>> {
    let stop = ConvergenceCriterion::new(stationary);
    starts
        .par_iter()
        .map(|x0| integrate(system, x0, cfg, Some(&stop)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityMargin {
    pub certified_globally_stable: bool,
    /// `μ + 2√(Φκ)`; positive inside the certified region.
    pub margin: f64,
    /// The bound `-2√(Φκ)`.
    pub bound: f64,
}

/// Certified global stability of the Keldysh model with the quadratic
/// certificate: `μ > -2√(Φκ)`.
pub fn keldysh_stability_margin(p: &KeldyshParams) -> Result<StabilityMargin> {
    p.validate()?;
    let bound = -2.0 * (p.friction * p.damper).sqrt();
    Ok(StabilityMargin {
        certified_globally_stable: p.mu > bound,
        margin: p.mu - bound,
        bound,
    })
}
