//! One- and two-parameter sweeps of the Keldysh model.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::describing::{hb_predict, HbVerdict};
use crate::dynamics::IntegratorConfig;
use crate::error::{Error, Result};
use crate::models::{build_keldysh, KeldyshParams};
use crate::oscillation::{
    classify_cycle, find_cycles, Classification, CycleSearch, OmegaLimitOptions, PoincareSection, Stability,
};
use crate::verify::keldysh_stability_margin;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    Mu,
    Friction,
    Damper,
    Inertia,
    Stiffness,
}

impl SweepParam {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParam::Mu => "mu",
            SweepParam::Friction => "friction",
            SweepParam::Damper => "damper",
            SweepParam::Inertia => "inertia",
            SweepParam::Stiffness => "stiffness",
        }
    }

    fn set(self, p: &mut KeldyshParams, v: f64) {
        match self {
            SweepParam::Mu => p.mu = v,
            SweepParam::Friction => p.friction = v,
            SweepParam::Damper => p.damper = v,
            SweepParam::Inertia => p.inertia = v,
            SweepParam::Stiffness => p.stiffness = v,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub param: SweepParam,
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl SweepAxis {
    /// Grid values; the endpoints are exactly `min` and `max`.
    pub fn values(&self) -> Vec<f64> {
        let n = self.points;
        if n == 1 {
            return vec![self.min];
        }
        (0..n)
            .map(|i| {
                if i == n - 1 {
                    self.max
                } else {
                    self.min + (self.max - self.min) * i as f64 / (n - 1) as f64
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepOptions {
    pub search: CycleSearch,
    /// Classify every stable cycle self-excited / hidden.
    pub classify: bool,
    pub epsilon: f64,
    pub n_dirs: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            search: CycleSearch::default(),
            classify: true,
            epsilon: 1e-3,
            n_dirs: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub index: Vec<usize>,
    pub params: KeldyshParams,
    pub cycle_count: Option<usize>,
    pub stable_cycles: Option<usize>,
    pub hidden_cycle_present: Option<bool>,
    pub certified: bool,
    pub margin: f64,
    pub hb_count: usize,
    pub verdict: Option<HbVerdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Consecutive grid points along `axis` where the observed cycle count
/// switches between zero and nonzero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Boundary {
    pub axis: usize,
    pub param: SweepParam,
    pub from_index: Vec<usize>,
    pub to_index: Vec<usize>,
    pub from_value: f64,
    pub to_value: f64,
    pub from_count: usize,
    pub to_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub base: KeldyshParams,
    pub axes: Vec<SweepAxis>,
    /// Row-major over the axes (last axis fastest).
    pub points: Vec<SweepPoint>,
    pub boundaries: Vec<Boundary>,
}

fn evaluate(p: KeldyshParams, index: Vec<usize>, opts: &SweepOptions, cfg: &IntegratorConfig) -> SweepPoint {
    let mut point = SweepPoint {
        index,
        params: p,
        cycle_count: None,
        stable_cycles: None,
        hidden_cycle_present: None,
        certified: false,
        margin: f64::NAN,
        hb_count: 0,
        verdict: None,
        error: None,
    };
    let run = |point: &mut SweepPoint| -> Result<()> {
        let m = keldysh_stability_margin(&p)?;
        point.certified = m.certified_globally_stable;
        point.margin = m.margin;
        point.hb_count = hb_predict(&p)?.cycle_count;
        let model = build_keldysh(&p)?;
        let cycles = find_cycles(
            &model.system,
            &PoincareSection::keldysh(),
            &model.stationary,
            &opts.search,
            cfg,
        )?;
        point.cycle_count = Some(cycles.len());
        point.stable_cycles = Some(cycles.iter().filter(|c| c.stability == Stability::Stable).count());
        point.verdict = Some(HbVerdict::from_counts(point.hb_count, cycles.len()));
        if opts.classify {
            let mut hidden = false;
            for (i, c) in cycles.iter().enumerate() {
                if c.stability != Stability::Stable {
                    continue;
                }
                let o = classify_cycle(
                    &model.system,
                    &cycles,
                    i,
                    &model.stationary,
                    opts.epsilon,
                    opts.n_dirs,
                    cfg,
                    &OmegaLimitOptions::default(),
                )?;
                hidden |= o.classification == Classification::Hidden;
            }
            point.hidden_cycle_present = Some(hidden);
        }
        Ok(())
    };
    if let Err(e) = run(&mut point) {
        point.error = Some(e.to_string());
    }
    point
}

/// Sweep one or two axes over `base`. Point failures are recorded in the
/// point and do not stop the sweep.
pub fn sweep_keldysh(
    base: &KeldyshParams,
    axes: &[SweepAxis],
    opts: &SweepOptions,
    cfg: &IntegratorConfig,
) -> Result<SweepResult> {
    if axes.is_empty() || axes.len() > 2 {
        return Err(Error::InvalidParameter {
            name: "axes",
            reason: format!("expected 1 or 2 sweep axes, got {}", axes.len()),
        });
    }
    for a in axes {
        if a.points == 0 || !(a.min.is_finite() && a.max.is_finite()) || a.min > a.max {
            return Err(Error::InvalidParameter {
                name: "axes",
                reason: format!("axis {} needs points >= 1 and finite min <= max", a.param.as_str()),
            });
        }
    }
    if axes.len() == 2 && axes[0].param == axes[1].param {
        return Err(Error::InvalidParameter {
            name: "axes",
            reason: "the two axes must sweep different parameters".into(),
        });
    }
    let values: Vec<Vec<f64>> = axes.iter().map(SweepAxis::values).collect();
    let mut grid = Vec::new();
    let dims: Vec<usize> = axes.iter().map(|a| a.points).collect();
    let total: usize = dims.iter().product();
    for flat in 0..total {
        let mut index = vec![0; dims.len()];
        let mut rem = flat;
        for d in (0..dims.len()).rev() {
            index[d] = rem % dims[d];
            rem /= dims[d];
        }
        let mut p = *base;
        for (d, a) in axes.iter().enumerate() {
            a.param.set(&mut p, values[d][index[d]]);
        }
        grid.push((p, index));
    }
    let points: Vec<SweepPoint> = grid
        .into_par_iter()
        .map(|(p, index)| evaluate(p, index, opts, cfg))
        .collect();

    let mut boundaries = Vec::new();
    let flat_of = |idx: &[usize]| idx.iter().zip(&dims).fold(0, |acc, (i, d)| acc * d + i);
    for (axis, a) in axes.iter().enumerate() {
        for p in &points {
            let i = p.index[axis];
            if i + 1 >= dims[axis] {
                continue;
            }
            let mut next = p.index.clone();
            next[axis] += 1;
            let q = &points[flat_of(&next)];
            if let (Some(c0), Some(c1)) = (p.cycle_count, q.cycle_count) {
                if (c0 == 0) != (c1 == 0) {
                    boundaries.push(Boundary {
                        axis,
                        param: a.param,
                        from_index: p.index.clone(),
                        to_index: next,
                        from_value: values[axis][i],
                        to_value: values[axis][i + 1],
                        from_count: c0,
                        to_count: c1,
                    });
                }
            }
        }
    }
    Ok(SweepResult {
        base: *base,
        axes: axes.to_vec(),
        points,
        boundaries,
    })
}

impl SweepResult {
    /// CSV grid, one row per point.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<String> = self.axes.iter().map(|a| a.param.as_str().to_string()).collect();
        header.extend(
            [
                "cycle_count",
                "stable_cycles",
                "hidden_cycle_present",
                "certified",
                "margin",
                "hb_count",
                "verdict",
                "error",
            ]
            .map(String::from),
        );
        w.write_record(&header).map_err(|e| Error::Io(e.to_string()))?;
        let opt = |v: Option<usize>| v.map_or(String::new(), |c| c.to_string());
        for p in &self.points {
            let mut row: Vec<String> = self
                .axes
                .iter()
                .map(|a| {
                    crate::io::fmt_f64(match a.param {
                        SweepParam::Mu => p.params.mu,
                        SweepParam::Friction => p.params.friction,
                        SweepParam::Damper => p.params.damper,
                        SweepParam::Inertia => p.params.inertia,
                        SweepParam::Stiffness => p.params.stiffness,
                    })
                })
                .collect();
            row.push(opt(p.cycle_count));
            row.push(opt(p.stable_cycles));
            row.push(p.hidden_cycle_present.map_or(String::new(), |h| h.to_string()));
            row.push(p.certified.to_string());
            row.push(crate::io::fmt_f64(p.margin));
            row.push(p.hb_count.to_string());
            row.push(p.verdict.map_or("error", HbVerdict::as_str).to_string());
            row.push(p.error.clone().unwrap_or_default());
            w.write_record(&row).map_err(|e| Error::Io(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
    }
}
