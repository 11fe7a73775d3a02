//! Run configuration: a single JSON document, unknown keys rejected.

use std::path::Path;

use anyhow::{anyhow, bail, Context};
use serde::{Deserialize, Serialize};

use hiddenosc::dynamics::IntegratorConfig;
use hiddenosc::models::{
    build_bk_example, build_keldysh, build_pll, lurie_from_parts, KeldyshParams, LurieSystem, Model, Nonlinearity,
    PllParams, StationarySet,
};
use hiddenosc::oscillation::{CycleSearch, OmegaLimitOptions, PoincareSection};
use hiddenosc::sweep::{SweepAxis, SweepOptions};
use hiddenosc::verify::{Certificate, ProbeConfig, TheoremVariant};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Simulate,
    Verify,
    Cycles,
    Hb,
    Sweep,
    Plot,
}

impl Task {
    pub fn as_str(self) -> &'static str {
        match self {
            Task::Simulate => "simulate",
            Task::Verify => "verify",
            Task::Cycles => "cycles",
            Task::Hb => "hb",
            Task::Sweep => "sweep",
            Task::Plot => "plot",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NonlinearitySpec {
    Linear { gain: f64 },
    Cubic { coeff: f64 },
    Tanh { gain: f64 },
    Sine { gain: f64 },
    DryFrictionPoly { friction: f64, damper: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LurieSpec {
    pub p: Vec<Vec<f64>>,
    pub q: Vec<f64>,
    pub r: Vec<f64>,
    pub phi: NonlinearitySpec,
    /// Equilibria; defaults to the origin.
    #[serde(default)]
    pub stationary: Option<StationarySet>,
    #[serde(default)]
    pub periodic: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    BkExample,
    Pll(PllParams),
    Keldysh(KeldyshParams),
    LurieCustom(LurieSpec),
}

impl ModelSpec {
    pub fn id(&self) -> &'static str {
        match self {
            ModelSpec::BkExample => "bk_example",
            ModelSpec::Pll(_) => "pll",
            ModelSpec::Keldysh(_) => "keldysh",
            ModelSpec::LurieCustom(_) => "lurie_custom",
        }
    }

    pub fn build(&self) -> hiddenosc::Result<Model> {
        match self {
            ModelSpec::BkExample => Ok(build_bk_example()),
            ModelSpec::Pll(p) => build_pll(p),
            ModelSpec::Keldysh(p) => build_keldysh(p),
            ModelSpec::LurieCustom(spec) => {
                let phi = match &spec.phi {
                    NonlinearitySpec::Linear { gain } => Nonlinearity::linear(*gain),
                    NonlinearitySpec::Cubic { coeff } => Nonlinearity::cubic(*coeff),
                    NonlinearitySpec::Tanh { gain } => Nonlinearity::tanh(*gain),
                    NonlinearitySpec::Sine { gain } => Nonlinearity::sine(*gain),
                    NonlinearitySpec::DryFrictionPoly { friction, damper } => {
                        Nonlinearity::dry_friction(*friction, *damper)?
                    }
                };
                let sys = LurieSystem {
                    p: spec.p.clone(),
                    q: spec.q.clone(),
                    r: spec.r.clone(),
                    phi,
                };
                let mut system = lurie_from_parts(&sys)?;
                if !spec.periodic.is_empty() {
                    system = system.with_periodic(spec.periodic.clone())?;
                }
                let n = spec.p.len();
                let stationary = spec.stationary.clone().unwrap_or_else(|| StationarySet::point(vec![0.0; n]));
                Ok(Model {
                    name: "lurie_custom".into(),
                    system,
                    stationary,
                    certificate: None,
                    labels: (1..=n).map(|i| format!("x{i}")).collect(),
                    divergence_probe: None,
                })
            }
        }
    }
}

/// Uniform start grid over a 2D box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    /// Points per axis.
    pub n: Vec<usize>,
}

impl GridSpec {
    pub fn points(&self) -> anyhow::Result<Vec<Vec<f64>>> {
        let d = self.lo.len();
        if d == 0 || self.hi.len() != d || self.n.len() != d {
            bail!("grid: lo, hi and n must have the same nonzero length");
        }
        let total: usize = self.n.iter().product();
        let mut out = Vec::with_capacity(total);
        for flat in 0..total {
            let mut rem = flat;
            let mut x = vec![0.0; d];
            for c in (0..d).rev() {
                let i = rem % self.n[c];
                rem /= self.n[c];
                x[c] = if self.n[c] == 1 {
                    0.5 * (self.lo[c] + self.hi[c])
                } else {
                    self.lo[c] + (self.hi[c] - self.lo[c]) * i as f64 / (self.n[c] - 1) as f64
                };
            }
            out.push(x);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StartsSpec {
    pub points: Vec<Vec<f64>>,
    pub grid: Option<GridSpec>,
}

impl StartsSpec {
    pub fn all(&self) -> anyhow::Result<Vec<Vec<f64>>> {
        let mut v = self.points.clone();
        if let Some(g) = &self.grid {
            v.extend(g.points()?);
        }
        Ok(v)
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty() && self.grid.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSpec {
    pub starts: StartsSpec,
    /// Stop at rest on the stationary set.
    pub stop_at_rest: bool,
    pub omega: OmegaLimitOptions,
}

impl Default for SimulateSpec {
    fn default() -> Self {
        Self {
            starts: StartsSpec::default(),
            stop_at_rest: true,
            omega: OmegaLimitOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadraticCertificate {
    /// `V(x) = x^T H x`.
    pub h: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySpec {
    pub probe: Option<ProbeConfig>,
    /// Trajectory starts for the trajectory-sampled conditions.
    pub starts: StartsSpec,
    /// Replaces the model's own certificate.
    pub certificate: Option<QuadraticCertificate>,
    pub theorem: Option<TheoremVariant>,
}

impl VerifySpec {
    pub fn certificate_for(&self, model: &Model, variant: TheoremVariant) -> anyhow::Result<Certificate> {
        if let Some(q) = &self.certificate {
            let n = model.system.dim();
            if q.h.len() != n || q.h.iter().any(|r| r.len() != n) {
                bail!("verify.certificate.h must be {n}x{n}");
            }
            return Ok(Certificate::quadratic(q.h.clone(), variant));
        }
        model
            .certificate
            .clone()
            .ok_or_else(|| anyhow!("model {} has no certificate; supply verify.certificate", model.name))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CyclesSpec {
    pub section: Option<PoincareSection>,
    pub search: CycleSearch,
    pub classify: bool,
    /// Probe radii; each is reported separately.
    pub epsilon: Vec<f64>,
    pub n_dirs: usize,
    pub omega: OmegaLimitOptions,
}

impl Default for CyclesSpec {
    fn default() -> Self {
        Self {
            section: None,
            search: CycleSearch::default(),
            classify: true,
            epsilon: vec![1e-3],
            n_dirs: 16,
            omega: OmegaLimitOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HbSpec {
    pub section: Option<PoincareSection>,
    pub search: CycleSearch,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub axes: Vec<SweepAxis>,
    pub options: SweepOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlotSpec {
    /// Trajectory CSV files, relative to the config file.
    pub trajectories: Vec<String>,
    /// `cycles.json` written by the cycles command.
    pub cycles: Option<String>,
    /// Add dashed harmonic-balance orbits (Keldysh only).
    pub hb_ellipses: bool,
    /// Coordinates to plot for states of dimension > 2.
    pub projection: Option<(usize, usize)>,
    pub title: String,
    pub file: String,
}

impl Default for PlotSpec {
    fn default() -> Self {
        Self {
            trajectories: Vec::new(),
            cycles: None,
            hb_ellipses: false,
            projection: None,
            title: String::new(),
            file: "portrait.svg".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSpec,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    /// When present, must match the subcommand.
    #[serde(default)]
    pub task: Option<Task>,
    #[serde(default)]
    pub simulate: SimulateSpec,
    #[serde(default)]
    pub verify: VerifySpec,
    #[serde(default)]
    pub cycles: CyclesSpec,
    #[serde(default)]
    pub hb: HbSpec,
    #[serde(default)]
    pub sweep: SweepSpec,
    #[serde(default)]
    pub plot: PlotSpec,
}

impl RunConfig {
    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| anyhow!("config: {e}"))?;
        cfg.integrator.validate().map_err(|e| anyhow!("config: integrator: {e}"))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text)
    }

    pub fn section(&self, explicit: &Option<PoincareSection>) -> anyhow::Result<PoincareSection> {
        if let Some(s) = explicit {
            return Ok(s.clone());
        }
        match self.model {
            ModelSpec::Keldysh(_) => Ok(PoincareSection::keldysh()),
            _ => bail!("model {} has no default section; set one in the config", self.model.id()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config() {
        let c = RunConfig::parse(r#"{"model": {"id": "bk_example"}}"#).unwrap();
        assert_eq!(c.model, ModelSpec::BkExample);
        assert_eq!(c.integrator, IntegratorConfig::default());
    }

    #[test]
    fn unknown_keys_rejected() {
        let e = RunConfig::parse(r#"{"model": {"id": "bk_example"}, "integratr": {}}"#).unwrap_err();
        assert!(e.to_string().contains("integratr"), "{e}");
        let e = RunConfig::parse(
            r#"{"model": {"id": "keldysh", "params": {"inertia":1,"stiffness":1,"friction":0.2,"damper":1,"mu":-1,"extra":2}}}"#,
        )
        .unwrap_err();
        assert!(e.to_string().contains("extra"));
    }

    #[test]
    fn errors_carry_position() {
        let e = RunConfig::parse("{\n  \"model\": {\"id\": \"nope\"}\n}").unwrap_err();
        assert!(e.to_string().contains("line 2"), "{e}");
    }

    #[test]
    fn grid_points() {
        let g = GridSpec {
            lo: vec![-1.0, 0.0],
            hi: vec![1.0, 2.0],
            n: vec![3, 2],
        };
        let p = g.points().unwrap();
        assert_eq!(p.len(), 6);
        assert_eq!(p[0], vec![-1.0, 0.0]);
        assert_eq!(p[5], vec![1.0, 2.0]);
    }

    #[test]
    fn bad_integrator_rejected() {
        assert!(RunConfig::parse(r#"{"model": {"id": "bk_example"}, "integrator": {"rel_tol": -1}}"#).is_err());
    }
}
