//! Vector fields, switching surfaces and the piecewise-smooth system type.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// `out = f(x)`.
pub type FieldFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;
/// Scalar function of state.
pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A smooth vector field `x' = f(x)` on R^dim with an optional analytic jacobian
/// (row-major, `dim * dim` entries).
#[derive(Clone)]
pub struct SmoothField {
    dim: usize,
    eval: FieldFn,
    jacobian: Option<FieldFn>,
}

impl fmt::Debug for SmoothField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SmoothField")
            .field("dim", &self.dim)
            .field("jacobian", &self.jacobian.is_some())
            .finish()
    }
}

impl SmoothField {
    pub fn new<F>(dim: usize, f: F) -> Self
    where
        F: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        assert!(dim > 0, "field dimension must be positive");
        Self {
            dim,
            eval: Arc::new(f),
            jacobian: None,
        }
    }

    pub fn with_jacobian<J>(mut self, j: J) -> Self
    where
        J: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        self.jacobian = Some(Arc::new(j));
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        (self.eval)(x, out)
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        (self.eval)(x, &mut out);
        out
    }

    pub fn has_jacobian(&self) -> bool {
        self.jacobian.is_some()
    }

    pub fn jacobian(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.jacobian.as_ref().map(|j| {
            let mut out = vec![0.0; self.dim * self.dim];
            j(x, &mut out);
            out
        })
    }

    /// Field of the time-reversed flow, `x' = -f(x)`.
    pub fn reversed(&self) -> Self {
        let eval = self.eval.clone();
        let jac = self.jacobian.clone();
        Self {
            dim: self.dim,
            eval: Arc::new(move |x, out| {
                eval(x, out);
                out.iter_mut().for_each(|v| *v = -*v);
            }),
            jacobian: jac.map(|j| {
                let j: FieldFn = Arc::new(move |x: &[f64], out: &mut [f64]| {
                    j(x, out);
                    out.iter_mut().for_each(|v| *v = -*v);
                });
                j
            }),
        }
    }

    /// Compare the analytic jacobian against central finite differences at the
    /// probe points. Fields without a jacobian pass trivially.
    pub fn check_jacobian(&self, probes: &[Vec<f64>], rel_tol: f64) -> Result<()> {
        let Some(jac) = &self.jacobian else {
            return Ok(());
        };
        let n = self.dim;
        let mut analytic = vec![0.0; n * n];
        let mut fp = vec![0.0; n];
        let mut fm = vec![0.0; n];
        for x in probes {
            if x.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: x.len(),
                });
            }
            jac(x, &mut analytic);
            let mut xp = x.clone();
            for col in 0..n {
                let h = 1e-6 * (1.0 + x[col].abs());
                xp[col] = x[col] + h;
                self.eval_into(&xp, &mut fp);
                xp[col] = x[col] - h;
                self.eval_into(&xp, &mut fm);
                xp[col] = x[col];
                for row in 0..n {
                    let numeric = (fp[row] - fm[row]) / (2.0 * h);
                    let a = analytic[row * n + col];
                    let scale = a.abs().max(numeric.abs()).max(1.0);
                    if (a - numeric).abs() > rel_tol * scale {
                        return Err(Error::JacobianMismatch {
                            state: x.clone(),
                            row,
                            col,
                            analytic: a,
                            numeric,
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

/// Interval-valued term active on the switching surface. On `s = 0` the
/// Filippov set is `base(x) + direction * [lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SetValuedGap {
    pub direction: Vec<f64>,
    pub lo: f64,
    pub hi: f64,
}

/// A hypersurface `s(x) = 0` splitting the state space into the `s > 0` region
/// (governed by `plus`) and the `s < 0` region (governed by `minus`).
#[derive(Clone)]
pub struct SwitchingSurface {
    s: ScalarFn,
    grad: FieldFn,
    pub plus: SmoothField,
    pub minus: SmoothField,
    pub gap: Option<SetValuedGap>,
}

impl fmt::Debug for SwitchingSurface {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SwitchingSurface")
            .field("plus", &self.plus)
            .field("minus", &self.minus)
            .field("gap", &self.gap)
            .finish()
    }
}

impl SwitchingSurface {
    pub fn new<S, G>(s: S, grad: G, plus: SmoothField, minus: SmoothField) -> Result<Self>
    where
        S: Fn(&[f64]) -> f64 + Send + Sync + 'static,
        G: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        if plus.dim() != minus.dim() {
            return Err(Error::DimensionMismatch {
                expected: plus.dim(),
                got: minus.dim(),
            });
        }
        Ok(Self {
            s: Arc::new(s),
            grad: Arc::new(grad),
            plus,
            minus,
            gap: None,
        })
    }

    /// Linear surface `s(x) = n.x`.
    pub fn linear(normal: Vec<f64>, plus: SmoothField, minus: SmoothField) -> Result<Self> {
        if normal.len() != plus.dim() {
            return Err(Error::DimensionMismatch {
                expected: plus.dim(),
                got: normal.len(),
            });
        }
        if normal.iter().all(|v| *v == 0.0) {
            return Err(Error::InvalidParameter {
                name: "normal",
                reason: "surface normal must be nonzero".into(),
            });
        }
        let n1 = normal.clone();
        let n2 = normal;
        Self::new(
            move |x| dot(&n1, x),
            move |_, out| out.copy_from_slice(&n2),
            plus,
            minus,
        )
    }

    pub fn with_gap(mut self, gap: SetValuedGap) -> Self {
        self.gap = Some(gap);
        self
    }

    pub fn dim(&self) -> usize {
        self.plus.dim()
    }

    #[inline]
    pub fn s(&self, x: &[f64]) -> f64 {
        (self.s)(x)
    }

    pub fn grad_into(&self, x: &[f64], out: &mut [f64]) {
        (self.grad)(x, out)
    }

    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim()];
        (self.grad)(x, &mut g);
        g
    }

    /// True when 0 lies in the Filippov set at an on-surface point: the segment
    /// between `f-(x)` and `f+(x)` passes through the origin (within `tol`).
    pub fn filippov_contains_zero(&self, x: &[f64], tol: f64) -> bool {
        let fp = self.plus.eval(x);
        let fm = self.minus.eval(x);
        let d: Vec<f64> = fp.iter().zip(&fm).map(|(p, m)| p - m).collect();
        let dd = dot(&d, &d);
        let t = if dd > 0.0 {
            (-dot(&fm, &d) / dd).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let res: f64 = fm
            .iter()
            .zip(&d)
            .map(|(m, di)| (m + t * di).powi(2))
            .sum::<f64>()
            .sqrt();
        res <= tol
    }

    fn reversed(&self) -> Self {
        Self {
            s: self.s.clone(),
            grad: self.grad.clone(),
            plus: self.plus.reversed(),
            minus: self.minus.reversed(),
            gap: self.gap.as_ref().map(|g| SetValuedGap {
                direction: g.direction.iter().map(|v| -v).collect(),
                lo: g.lo,
                hi: g.hi,
            }),
        }
    }
}

#[derive(Debug, Clone)]
pub enum VectorField {
    Smooth(SmoothField),
    Switched(SwitchingSurface),
}

/// Either a smooth system or a smooth system split by one switching surface,
/// plus the coordinates that are 2π-periodic (cylindrical phase space).
#[derive(Debug, Clone)]
pub struct PiecewiseSmoothSystem {
    field: VectorField,
    periodic: Vec<usize>,
}

impl PiecewiseSmoothSystem {
    pub fn smooth(field: SmoothField) -> Self {
        Self {
            field: VectorField::Smooth(field),
            periodic: Vec::new(),
        }
    }

    pub fn switched(surface: SwitchingSurface) -> Self {
        Self {
            field: VectorField::Switched(surface),
            periodic: Vec::new(),
        }
    }

    /// Declare 2π-periodic coordinates. Only valid for models whose field is
    /// periodic in those coordinates; the caller is responsible for that, and
    /// [`PiecewiseSmoothSystem::check_periodicity`] samples it.
    pub fn with_periodic(mut self, coords: Vec<usize>) -> Result<Self> {
        for &c in &coords {
            if c >= self.dim() {
                return Err(Error::InvalidParameter {
                    name: "periodic_coordinates",
                    reason: format!("coordinate {c} out of range for dim {}", self.dim()),
                });
            }
        }
        let mut coords = coords;
        coords.sort_unstable();
        coords.dedup();
        self.periodic = coords;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        match &self.field {
            VectorField::Smooth(f) => f.dim(),
            VectorField::Switched(s) => s.dim(),
        }
    }

    pub fn field(&self) -> &VectorField {
        &self.field
    }

    pub fn surface(&self) -> Option<&SwitchingSurface> {
        match &self.field {
            VectorField::Switched(s) => Some(s),
            VectorField::Smooth(_) => None,
        }
    }

    pub fn smooth_part(&self) -> Option<&SmoothField> {
        match &self.field {
            VectorField::Smooth(f) => Some(f),
            VectorField::Switched(_) => None,
        }
    }

    pub fn periodic_coordinates(&self) -> &[usize] {
        &self.periodic
    }

    /// Off-surface field value: the smooth field, or the branch selected by
    /// the sign of `s(x)` (`s >= 0` uses the plus branch).
    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        match &self.field {
            VectorField::Smooth(f) => f.eval(x),
            VectorField::Switched(s) => {
                if s.s(x) >= 0.0 {
                    s.plus.eval(x)
                } else {
                    s.minus.eval(x)
                }
            }
        }
    }

    /// System of the time-reversed flow.
    pub fn reversed(&self) -> Self {
        let field = match &self.field {
            VectorField::Smooth(f) => VectorField::Smooth(f.reversed()),
            VectorField::Switched(s) => VectorField::Switched(s.reversed()),
        };
        Self {
            field,
            periodic: self.periodic.clone(),
        }
    }

    /// Sample `f(x + 2π e_c) = f(x)` for each declared periodic coordinate.
    pub fn check_periodicity(&self, probes: &[Vec<f64>], tol: f64) -> bool {
        probes.iter().all(|x| {
            let f0 = self.eval(x);
            self.periodic.iter().all(|&c| {
                let mut y = x.clone();
                y[c] += std::f64::consts::TAU;
                let f1 = self.eval(&y);
                f0.iter()
                    .zip(&f1)
                    .all(|(a, b)| (a - b).abs() <= tol * (1.0 + a.abs()))
            })
        })
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
