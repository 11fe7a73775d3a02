//! Filippov convexification on a single switching surface.

use serde::{Deserialize, Serialize};

use super::system::{dot, norm, PiecewiseSmoothSystem, SwitchingSurface, VectorField};
use crate::error::{Error, Result};

/// Local behaviour of the flow at an on-surface point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceMode {
    CrossUp,
    CrossDown,
    Sliding,
}

/// Field currently driving the state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Smooth,
    Plus,
    Minus,
    Sliding,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Smooth => "smooth",
            Mode::Plus => "plus",
            Mode::Minus => "minus",
            Mode::Sliding => "sliding",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "smooth" => Some(Mode::Smooth),
            "plus" => Some(Mode::Plus),
            "minus" => Some(Mode::Minus),
            "sliding" => Some(Mode::Sliding),
            _ => None,
        }
    }
}

/// Transversal components `(grad_s.f+, grad_s.f-)` and a scale used for the
/// tangency tolerance.
fn transversal(surface: &SwitchingSurface, x: &[f64]) -> (f64, f64, f64) {
    let g = surface.grad(x);
    let fp = surface.plus.eval(x);
    let fm = surface.minus.eval(x);
    let scale = norm(&g) * (norm(&fp).max(norm(&fm))).max(1.0);
    (dot(&g, &fp), dot(&g, &fm), scale)
}

const TANGENCY_REL: f64 = 1e-12;

/// Decide how the flow leaves an on-surface point.
///
/// With `a = grad_s.f+` and `b = grad_s.f-`, the motion is sliding iff
/// `a < 0 < b`; otherwise both branches share the sign of their transversal
/// component and the state crosses in that direction.
pub fn detect_mode(surface: &SwitchingSurface, x: &[f64], event_tol: f64) -> Result<SurfaceMode> {
    let sv = surface.s(x);
    if sv.abs() > event_tol {
        return Err(Error::NotOnSurface(sv));
    }
    let (a, b, scale) = transversal(surface, x);
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::NonFinite("branch field"));
    }
    let tol = TANGENCY_REL * scale;
    if a.abs() <= tol || b.abs() <= tol {
        return Err(Error::DegenerateTangency { plus: a, minus: b });
    }
    match (a > 0.0, b > 0.0) {
        (false, true) => Ok(SurfaceMode::Sliding),
        (true, true) => Ok(SurfaceMode::CrossUp),
        (false, false) => Ok(SurfaceMode::CrossDown),
        (true, false) => Err(Error::RepellingSurface),
    }
}

/// Weight `α` of the plus branch in the tangent convex combination.
pub fn sliding_weight(surface: &SwitchingSurface, x: &[f64]) -> Result<f64> {
    let (a, b, scale) = transversal(surface, x);
    let den = b - a;
    if den.abs() <= TANGENCY_REL * scale || !den.is_finite() {
        return Err(Error::DegenerateTangency { plus: a, minus: b });
    }
    Ok(b / den)
}

/// Filippov sliding field `α f+ + (1-α) f-` with `α = b / (b - a)`, the
/// unique convex combination tangent to the surface.
pub fn slide_field(surface: &SwitchingSurface, x: &[f64]) -> Result<Vec<f64>> {
    let alpha = sliding_weight(surface, x)?;
    let fp = surface.plus.eval(x);
    let fm = surface.minus.eval(x);
    Ok(fp
        .iter()
        .zip(&fm)
        .map(|(p, m)| alpha * p + (1.0 - alpha) * m)
        .collect())
}

pub(crate) fn slide_field_into(surface: &SwitchingSurface, x: &[f64], out: &mut [f64]) -> Result<f64> {
    let g = surface.grad(x);
    surface.plus.eval_into(x, out);
    let a = dot(&g, out);
    let fp: Vec<f64> = out.to_vec();
    surface.minus.eval_into(x, out);
    let b = dot(&g, out);
    let scale = norm(&g) * norm(&fp).max(norm(out)).max(1.0);
    let den = b - a;
    if den.abs() <= TANGENCY_REL * scale || !den.is_finite() {
        return Err(Error::DegenerateTangency { plus: a, minus: b });
    }
    let alpha = b / den;
    for (o, p) in out.iter_mut().zip(&fp) {
        *o = alpha * p + (1.0 - alpha) * *o;
    }
    Ok(alpha)
}

/// Result of a Lie-derivative evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LieDerivative {
    pub value: f64,
    pub mode: Mode,
    /// The point was on the surface at a crossing; `value` uses the branch the
    /// state crosses into.
    pub post_crossing: bool,
}

/// `grad V(x) . f(x)` with `f` the field active at `x`.
pub fn lie_derivative<G>(
    system: &PiecewiseSmoothSystem,
    grad_v: G,
    x: &[f64],
    event_tol: f64,
) -> Result<LieDerivative>
where
    G: Fn(&[f64]) -> Vec<f64>,
{
    if x.len() != system.dim() {
        return Err(Error::DimensionMismatch {
            expected: system.dim(),
            got: x.len(),
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("state"));
    }
    let gv = grad_v(x);
    let (f, mode, post_crossing) = match system.field() {
        VectorField::Smooth(sf) => (sf.eval(x), Mode::Smooth, false),
        VectorField::Switched(surf) => {
            let sv = surf.s(x);
            if sv > event_tol {
                (surf.plus.eval(x), Mode::Plus, false)
            } else if sv < -event_tol {
                (surf.minus.eval(x), Mode::Minus, false)
            } else {
                match detect_mode(surf, x, event_tol)? {
                    SurfaceMode::Sliding => (slide_field(surf, x)?, Mode::Sliding, false),
                    SurfaceMode::CrossUp => (surf.plus.eval(x), Mode::Plus, true),
                    SurfaceMode::CrossDown => (surf.minus.eval(x), Mode::Minus, true),
                }
            }
        }
    };
    Ok(LieDerivative {
        value: dot(&gv, &f),
        mode,
        post_crossing,
    })
}
