//! Concrete models: the Barbashin–Krasovsky example, a second-order PLL, the
//! Keldysh flutter-suppression model and general Lurie systems
//! `x' = P x + q φ(r^T x)`.

mod stationary;

pub use stationary::StationarySet;

use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

use crate::dynamics::{dot, PiecewiseSmoothSystem, SetValuedGap, SmoothField, SwitchingSurface};
use crate::error::{finite, positive, Error, Result};
use crate::verify::{Certificate, CertificateForm, TheoremVariant};

pub type ScalarMap = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Scalar nonlinearity of a Lurie system.
#[derive(Clone)]
pub enum Nonlinearity {
    /// Continuous sector nonlinearity with `φ(0) = 0`; optional derivative and
    /// antiderivative `∫_0^σ φ`.
    SectorContinuous {
        phi: ScalarMap,
        derivative: Option<ScalarMap>,
        integral: Option<ScalarMap>,
    },
    /// 2π-periodic continuous nonlinearity.
    Periodic {
        phi: ScalarMap,
        derivative: Option<ScalarMap>,
        integral: Option<ScalarMap>,
    },
    /// `(Φ + κσ²) sign σ`, set-valued `[-Φ, Φ]` at `σ = 0`.
    DryFrictionPoly { friction: f64, damper: f64 },
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Nonlinearity::SectorContinuous { .. } => write!(f, "SectorContinuous"),
            Nonlinearity::Periodic { .. } => write!(f, "Periodic"),
            Nonlinearity::DryFrictionPoly { friction, damper } => {
                write!(f, "DryFrictionPoly {{ friction: {friction}, damper: {damper} }}")
            }
        }
    }
}

impl Nonlinearity {
    pub fn zero() -> Self {
        Self::linear(0.0)
    }

    pub fn linear(gain: f64) -> Self {
        Nonlinearity::SectorContinuous {
            phi: Arc::new(move |s| gain * s),
            derivative: Some(Arc::new(move |_| gain)),
            integral: Some(Arc::new(move |s| 0.5 * gain * s * s)),
        }
    }

    pub fn cubic(coeff: f64) -> Self {
        Nonlinearity::SectorContinuous {
            phi: Arc::new(move |s| coeff * s * s * s),
            derivative: Some(Arc::new(move |s| 3.0 * coeff * s * s)),
            integral: Some(Arc::new(move |s| 0.25 * coeff * s.powi(4))),
        }
    }

    pub fn tanh(gain: f64) -> Self {
        Nonlinearity::SectorContinuous {
            phi: Arc::new(move |s| gain * s.tanh()),
            derivative: Some(Arc::new(move |s| gain / s.cosh().powi(2))),
            integral: Some(Arc::new(move |s| gain * s.cosh().ln())),
        }
    }

    pub fn sine(gain: f64) -> Self {
        Nonlinearity::Periodic {
            phi: Arc::new(move |s| gain * s.sin()),
            derivative: Some(Arc::new(move |s| gain * s.cos())),
            integral: Some(Arc::new(move |s| gain * (1.0 - s.cos()))),
        }
    }

    pub fn dry_friction(friction: f64, damper: f64) -> Result<Self> {
        positive("friction", friction)?;
        positive("damper", damper)?;
        Ok(Nonlinearity::DryFrictionPoly { friction, damper })
    }

    /// Single-valued value; for dry friction, `σ = 0` maps to 0 (the midpoint
    /// of the set-valued gap).
    pub fn eval(&self, s: f64) -> f64 {
        match self {
            Nonlinearity::SectorContinuous { phi, .. } | Nonlinearity::Periodic { phi, .. } => phi(s),
            Nonlinearity::DryFrictionPoly { friction, damper } => {
                if s == 0.0 {
                    0.0
                } else {
                    (friction + damper * s * s) * s.signum()
                }
            }
        }
    }

    /// `[lo, hi]` values at `σ` (degenerate except at the dry-friction jump).
    pub fn set_value(&self, s: f64) -> (f64, f64) {
        match self {
            Nonlinearity::DryFrictionPoly { friction, .. } if s == 0.0 => (-friction, *friction),
            _ => {
                let v = self.eval(s);
                (v, v)
            }
        }
    }

    /// `∫_0^σ φ(τ) dτ`, when known in closed form.
    pub fn integral(&self, s: f64) -> Option<f64> {
        match self {
            Nonlinearity::SectorContinuous { integral, .. } | Nonlinearity::Periodic { integral, .. } => {
                integral.as_ref().map(|i| i(s))
            }
            Nonlinearity::DryFrictionPoly { friction, damper } => {
                Some(friction * s.abs() + damper * s.abs().powi(3) / 3.0)
            }
        }
    }

    pub fn is_discontinuous(&self) -> bool {
        matches!(self, Nonlinearity::DryFrictionPoly { .. })
    }
}

/// `x' = P x + q φ(r^T x)`.
#[derive(Debug, Clone)]
pub struct LurieSystem {
    pub p: Vec<Vec<f64>>,
    pub q: Vec<f64>,
    pub r: Vec<f64>,
    pub phi: Nonlinearity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KeldyshParams {
    /// Moment of inertia `J`.
    pub inertia: f64,
    /// Stiffness `k`.
    pub stiffness: f64,
    /// Dry friction coefficient `Φ`.
    pub friction: f64,
    /// Damper parameter `κ`.
    pub damper: f64,
    /// Net damping `μ = λ - h`.
    pub mu: f64,
}

impl KeldyshParams {
    /// `J = k = κ = 1` with the given friction and damping.
    pub fn unit(friction: f64, mu: f64) -> Self {
        Self {
            inertia: 1.0,
            stiffness: 1.0,
            friction,
            damper: 1.0,
            mu,
        }
    }

    pub fn validate(&self) -> Result<()> {
        positive("inertia", self.inertia)?;
        positive("stiffness", self.stiffness)?;
        positive("friction", self.friction)?;
        positive("damper", self.damper)?;
        finite("mu", self.mu)
    }

    /// Half-width `Φ/k` of the stationary segment.
    pub fn segment_half_width(&self) -> f64 {
        self.friction / self.stiffness
    }

    /// Matrices of the Lurie form.
    pub fn lurie(&self) -> LurieSystem {
        let j = self.inertia;
        LurieSystem {
            p: vec![vec![0.0, 1.0 / j], vec![-self.stiffness, -self.mu / j]],
            q: vec![0.0, -1.0],
            r: vec![0.0, 1.0 / j],
            phi: Nonlinearity::DryFrictionPoly {
                friction: self.friction,
                damper: self.damper,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PllParams {
    pub tau1: f64,
    pub tau2: f64,
    pub k_vco: f64,
    /// Frequency detuning `ω_free`.
    pub omega_free: f64,
}

impl Default for PllParams {
    fn default() -> Self {
        Self {
            tau1: 1.0,
            tau2: 1.0,
            k_vco: 1.0,
            omega_free: 0.5,
        }
    }
}

impl PllParams {
    pub fn validate(&self) -> Result<()> {
        positive("tau1", self.tau1)?;
        positive("tau2", self.tau2)?;
        positive("k_vco", self.k_vco)?;
        finite("omega_free", self.omega_free)
    }

    /// Filter state of every equilibrium, `ω_free / K_vco`.
    pub fn z_eq(&self) -> f64 {
        self.omega_free / self.k_vco
    }
}

/// A system bundled with its stationary set and (optional) certificate.
#[derive(Debug, Clone)]
pub struct Model {
    pub name: String,
    pub system: PiecewiseSmoothSystem,
    pub stationary: StationarySet,
    pub certificate: Option<Certificate>,
    /// Coordinate labels for output files.
    pub labels: Vec<String>,
    /// Start known to leave every bounded region, when the model has one.
    pub divergence_probe: Option<Vec<f64>>,
}

/// Barbashin–Krasovsky example: globally asymptotically stable locally, but
/// with a certificate that is not radially unbounded and a domain of
/// instability.
pub fn build_bk_example() -> Model {
    let field = SmoothField::new(2, |x, out| {
        let u = 1.0 + x[0] * x[0];
        let u2 = u * u;
        out[0] = -2.0 * x[0] / u2 + 2.0 * x[1];
        out[1] = -2.0 * x[1] / u2 - 2.0 * x[0] / u2;
    })
    .with_jacobian(|x, j| {
        let u = 1.0 + x[0] * x[0];
        let u2 = u * u;
        let u3 = u2 * u;
        j[0] = -2.0 / u2 + 8.0 * x[0] * x[0] / u3;
        j[1] = 2.0;
        j[2] = -2.0 / u2 + 8.0 * x[0] * (x[1] + x[0]) / u3;
        j[3] = -2.0 / u2;
    });
    let cert = Certificate::new(
        2,
        |x| x[1] * x[1] + x[0] * x[0] / (1.0 + x[0] * x[0]),
        |x, g| {
            let u = 1.0 + x[0] * x[0];
            g[0] = 2.0 * x[0] / (u * u);
            g[1] = 2.0 * x[1];
        },
        CertificateForm::General,
        TheoremVariant::BarbashinKrasovsky,
    );
    Model {
        name: "bk_example".into(),
        system: PiecewiseSmoothSystem::smooth(field),
        stationary: StationarySet::point(vec![0.0, 0.0]),
        certificate: Some(cert),
        labels: vec!["x1".into(), "x2".into()],
        divergence_probe: Some(vec![5.0, 5.0]),
    }
}

/// Second-order PLL with proportionally-integrating filter, state `(z, σ)`
/// with `σ` 2π-periodic.
pub fn build_pll(p: &PllParams) -> Result<Model> {
    p.validate()?;
    let PllParams {
        tau1,
        tau2,
        k_vco,
        omega_free,
    } = *p;
    let field = SmoothField::new(2, move |x, out| {
        let s = x[1].sin();
        out[0] = s / tau1;
        out[1] = omega_free - k_vco * (x[0] + tau2 / tau1 * s);
    })
    .with_jacobian(move |x, j| {
        let c = x[1].cos();
        j[0] = 0.0;
        j[1] = c / tau1;
        j[2] = -k_vco;
        j[3] = -k_vco * tau2 / tau1 * c;
    });
    let z_eq = p.z_eq();
    let cert = Certificate::new(
        2,
        move |x| 0.5 * (x[0] - z_eq).powi(2) + (1.0 - x[1].cos()) / (tau1 * k_vco),
        move |x, g| {
            g[0] = x[0] - z_eq;
            g[1] = x[1].sin() / (tau1 * k_vco);
        },
        CertificateForm::PeriodicLuriePostnikov,
        TheoremVariant::LeonovCylindrical,
    );
    Ok(Model {
        name: "pll".into(),
        system: PiecewiseSmoothSystem::smooth(field).with_periodic(vec![1])?,
        stationary: StationarySet {
            points: vec![vec![z_eq, 0.0], vec![z_eq, std::f64::consts::PI]],
            segments: Vec::new(),
            periodic: vec![1],
        },
        certificate: Some(cert),
        labels: vec!["z".into(), "sigma".into()],
        divergence_probe: None,
    })
}

fn keldysh_branch(p: KeldyshParams, sign: f64) -> SmoothField {
    let KeldyshParams {
        inertia: j,
        stiffness: k,
        friction,
        damper,
        mu,
    } = p;
    SmoothField::new(2, move |x, out| {
        let sigma = x[1] / j;
        out[0] = sigma;
        out[1] = -k * x[0] - mu * sigma - sign * (friction + damper * sigma * sigma);
    })
    .with_jacobian(move |x, jac| {
        let sigma = x[1] / j;
        jac[0] = 0.0;
        jac[1] = 1.0 / j;
        jac[2] = -k;
        jac[3] = -mu / j - sign * 2.0 * damper * sigma / j;
    })
}

/// Keldysh flutter-suppression model with a hydraulic damper with dry
/// friction. The surface is `x2 = 0`; on it the friction force is set-valued
/// and the segment `|x1| <= Φ/k` is stationary.
pub fn build_keldysh(p: &KeldyshParams) -> Result<Model> {
    p.validate()?;
    let surface = SwitchingSurface::linear(vec![0.0, 1.0], keldysh_branch(*p, 1.0), keldysh_branch(*p, -1.0))?
        .with_gap(SetValuedGap {
            direction: vec![0.0, -1.0],
            lo: -p.friction,
            hi: p.friction,
        });
    let (k, j) = (p.stiffness, p.inertia);
    let cert = Certificate::new(
        2,
        move |x| 0.5 * (k * x[0] * x[0] + x[1] * x[1] / j),
        move |x, g| {
            g[0] = k * x[0];
            g[1] = x[1] / j;
        },
        CertificateForm::Quadratic,
        TheoremVariant::GeligLeonov,
    );
    let w = p.segment_half_width();
    Ok(Model {
        name: "keldysh".into(),
        system: PiecewiseSmoothSystem::switched(surface),
        stationary: StationarySet::segment(vec![-w, 0.0], vec![w, 0.0]),
        certificate: Some(cert),
        labels: vec!["x1".into(), "x2".into()],
        divergence_probe: None,
    })
}

fn affine_field(p: &[Vec<f64>], q: &[f64], x: &[f64], phi_value: f64, out: &mut [f64]) {
    for (i, row) in p.iter().enumerate() {
        out[i] = dot(row, x) + q[i] * phi_value;
    }
}

/// General Lurie system. Continuous nonlinearities give a smooth field; the
/// dry-friction nonlinearity gives a switched system on `r^T x = 0`.
pub fn lurie_from_parts(sys: &LurieSystem) -> Result<PiecewiseSmoothSystem> {
    let n = sys.p.len();
    if n == 0 {
        return Err(Error::InvalidParameter {
            name: "P",
            reason: "empty matrix".into(),
        });
    }
    for row in &sys.p {
        if row.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: row.len(),
            });
        }
    }
    for v in [&sys.q, &sys.r] {
        if v.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: v.len(),
            });
        }
    }
    let p = Arc::new(sys.p.clone());
    let q = Arc::new(sys.q.clone());
    let r = Arc::new(sys.r.clone());
    match &sys.phi {
        Nonlinearity::SectorContinuous { phi, derivative, .. } | Nonlinearity::Periodic { phi, derivative, .. } => {
            let (p1, q1, r1, phi1) = (p.clone(), q.clone(), r.clone(), phi.clone());
            let mut field = SmoothField::new(n, move |x, out| {
                let s = dot(&r1, x);
                affine_field(&p1, &q1, x, phi1(s), out);
            });
            if let Some(d) = derivative.clone() {
                field = field.with_jacobian(move |x, jac| {
                    let g = d(dot(&r, x));
                    for i in 0..n {
                        for c in 0..n {
                            jac[i * n + c] = p[i][c] + q[i] * g * r[c];
                        }
                    }
                });
            }
            Ok(PiecewiseSmoothSystem::smooth(field))
        }
        Nonlinearity::DryFrictionPoly { friction, damper } => {
            let (friction, damper) = (*friction, *damper);
            let branch = |sign: f64| {
                let (p, q, r) = (p.clone(), q.clone(), r.clone());
                let (pj, qj, rj) = (p.clone(), q.clone(), r.clone());
                SmoothField::new(n, move |x, out| {
                    let s = dot(&r, x);
                    affine_field(&p, &q, x, sign * (friction + damper * s * s), out);
                })
                .with_jacobian(move |x, jac| {
                    let g = sign * 2.0 * damper * dot(&rj, x);
                    for i in 0..n {
                        for c in 0..n {
                            jac[i * n + c] = pj[i][c] + qj[i] * g * rj[c];
                        }
                    }
                })
            };
            let surface = SwitchingSurface::linear(sys.r.clone(), branch(1.0), branch(-1.0))?.with_gap(SetValuedGap {
                direction: sys.q.clone(),
                lo: -friction,
                hi: friction,
            });
            Ok(PiecewiseSmoothSystem::switched(surface))
        }
    }
}

/// Distance from `x` to the stationary set.
pub fn distance_to_stationary(set: &StationarySet, x: &[f64], wrap: &[usize]) -> f64 {
    set.distance(x, wrap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{detect_mode, lie_derivative, slide_field, SurfaceMode};

    fn two_cycles() -> KeldyshParams {
        KeldyshParams::unit(0.2, -1.2987)
    }

    #[test]
    fn bk_field_values() {
        let m = build_bk_example();
        assert_eq!(m.system.eval(&[0.0, 0.0]), vec![0.0, 0.0]);
        assert_eq!(m.system.eval(&[1.0, 0.0]), vec![-0.5, -0.5]);
        assert_eq!(m.certificate.as_ref().unwrap().value(&[1.0, 0.0]), 0.5);
        let probes = vec![vec![0.3, 1.0], vec![-2.0, 0.7], vec![4.0, -3.0]];
        m.system.smooth_part().unwrap().check_jacobian(&probes, 1e-4).unwrap();
    }

    #[test]
    fn bk_lie_derivative_closed_form() {
        let m = build_bk_example();
        let c = m.certificate.unwrap();
        for x in [[0.5, -0.3], [2.0, 1.0], [-1.5, 0.25]] {
            let u: f64 = 1.0 + x[0] * x[0];
            let expect = -4.0 * x[0] * x[0] / u.powi(4) - 4.0 * x[1] * x[1] / u.powi(2);
            let got = lie_derivative(&m.system, |y| c.gradient(y), &x, 1e-10).unwrap().value;
            assert!((got - expect).abs() <= 1e-14 * (1.0 + expect.abs()), "{got} vs {expect}");
        }
    }

    #[test]
    fn pll_equilibrium_and_certificate() {
        let p = PllParams {
            tau1: 1.0,
            tau2: 1.0,
            k_vco: 1.0,
            omega_free: 0.5,
        };
        let m = build_pll(&p).unwrap();
        assert_eq!(m.system.eval(&[0.5, 0.0]), vec![0.0, 0.0]);
        let c = m.certificate.as_ref().unwrap();
        assert!((c.value(&[0.5, std::f64::consts::PI]) - 2.0).abs() < 1e-15);
        assert!(m.stationary.validate_against(&m.system, 0, 1e-12));
        assert!(m.system.check_periodicity(&[vec![0.3, 1.0], vec![-2.0, 5.0]], 1e-12));
    }

    #[test]
    fn keldysh_segment_and_field() {
        let m = build_keldysh(&two_cycles()).unwrap();
        assert_eq!(m.stationary.segments, vec![(vec![-0.2, 0.0], vec![0.2, 0.0])]);
        let f = m.system.eval(&[0.0, 1.0]);
        assert_eq!(f[0], 1.0);
        assert!((f[1] - 0.0987).abs() < 1e-12);
        assert!(m.stationary.validate_against(&m.system, 9, 1e-12));
        // just outside the segment 0 is not in F(x)
        let surf = m.system.surface().unwrap();
        assert!(!surf.filippov_contains_zero(&[0.2001, 0.0], 1e-9));
    }

    #[test]
    fn keldysh_modes_on_surface() {
        let m = build_keldysh(&two_cycles()).unwrap();
        let surf = m.system.surface().unwrap();
        assert_eq!(detect_mode(surf, &[0.1, 0.0], 1e-10).unwrap(), SurfaceMode::Sliding);
        assert_eq!(detect_mode(surf, &[1.0, 0.0], 1e-10).unwrap(), SurfaceMode::CrossDown);
        assert_eq!(detect_mode(surf, &[-1.0, 0.0], 1e-10).unwrap(), SurfaceMode::CrossUp);
        let g = slide_field(surf, &[0.1, 0.0]).unwrap();
        assert_eq!(g, vec![0.0, 0.0]);
    }

    #[test]
    fn keldysh_gap_matches_branch_difference() {
        let m = build_keldysh(&two_cycles()).unwrap();
        let surf = m.system.surface().unwrap();
        let gap = surf.gap.as_ref().unwrap();
        for x1 in [-1.0, 0.0, 0.3, 2.5] {
            let x = [x1, 0.0];
            let fp = surf.plus.eval(&x);
            let fm = surf.minus.eval(&x);
            for c in 0..2 {
                let d = fp[c] - fm[c];
                assert!((d - gap.direction[c] * (gap.hi - gap.lo)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn zero_nonlinearity_is_linear() {
        let sys = lurie_from_parts(&LurieSystem {
            p: vec![vec![-1.0, 2.0], vec![0.5, -3.0]],
            q: vec![1.0, 1.0],
            r: vec![1.0, 0.0],
            phi: Nonlinearity::zero(),
        })
        .unwrap();
        assert_eq!(sys.eval(&[1.0, 2.0]), vec![3.0, -5.5]);
    }

    #[test]
    fn lurie_dimension_mismatch() {
        let err = lurie_from_parts(&LurieSystem {
            p: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            q: vec![1.0],
            r: vec![1.0, 0.0],
            phi: Nonlinearity::zero(),
        })
        .unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn invalid_keldysh_params() {
        let mut p = two_cycles();
        p.friction = 0.0;
        assert!(build_keldysh(&p).is_err());
        p.friction = 0.2;
        p.inertia = -1.0;
        assert!(build_keldysh(&p).is_err());
    }

    #[test]
    fn dry_friction_set_value() {
        let phi = Nonlinearity::dry_friction(0.2, 1.0).unwrap();
        assert_eq!(phi.set_value(0.0), (-0.2, 0.2));
        assert!((phi.eval(0.5) - 0.45).abs() < 1e-15);
        assert!((phi.eval(-0.5) + 0.45).abs() < 1e-15);
    }
}
