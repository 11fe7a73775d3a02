//! Dormand–Prince 5(4) stepping with surface events and Filippov sliding.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::filippov::{detect_mode, slide_field_into, sliding_weight, Mode, SurfaceMode};
use super::system::{dot, norm, PiecewiseSmoothSystem, SwitchingSurface, VectorField};
use super::trajectory::{
    ConvergenceCriterion, Event, EventKind, IntegratorConfig, Sample, TerminalStatus, Trajectory,
};
use crate::error::{Error, Result};

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
/// Difference between the 5th and embedded 4th order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// One accepted piece of trajectory, integrated in a single mode.
#[derive(Debug, Clone)]
pub struct Segment {
    pub t0: f64,
    pub x0: Vec<f64>,
    pub t1: f64,
    pub x1: Vec<f64>,
    /// Mode used to integrate the segment.
    pub mode: Mode,
    /// Mode active from `x1` onwards.
    pub next_mode: Mode,
    pub event: Option<Event>,
}

impl Segment {
    pub fn h(&self) -> f64 {
        self.t1 - self.t0
    }
}

/// Incremental integrator; [`integrate`] and the return map both drive it.
pub struct FlowStepper<'a> {
    system: &'a PiecewiseSmoothSystem,
    cfg: &'a IntegratorConfig,
    t: f64,
    t_end: f64,
    x: Vec<f64>,
    mode: Mode,
    h: f64,
    k1: Vec<f64>,
    rng: ChaCha8Rng,
    pending_events: Vec<Event>,
}

/// Failure with the last valid state.
#[derive(Debug, Clone)]
pub struct StepFailure {
    pub t: f64,
    pub x: Vec<f64>,
    pub reason: String,
}

fn surface_of(system: &PiecewiseSmoothSystem) -> &SwitchingSurface {
    system.surface().expect("mode requires a switching surface")
}

/// Newton projection onto `s = 0`.
fn project(surface: &SwitchingSurface, x: &mut [f64], tol: f64) {
    let mut g = vec![0.0; x.len()];
    for _ in 0..6 {
        let s = surface.s(x);
        if s.abs() <= 0.01 * tol {
            break;
        }
        surface.grad_into(x, &mut g);
        let gg = dot(&g, &g);
        if gg == 0.0 {
            break;
        }
        for (xi, gi) in x.iter_mut().zip(&g) {
            *xi -= s * gi / gg;
        }
    }
}

impl<'a> FlowStepper<'a> {
    pub fn new(system: &'a PiecewiseSmoothSystem, x0: &[f64], cfg: &'a IntegratorConfig) -> Result<Self> {
        cfg.validate()?;
        if x0.len() != system.dim() {
            return Err(Error::DimensionMismatch {
                expected: system.dim(),
                got: x0.len(),
            });
        }
        if x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("initial state"));
        }
        let mut st = Self {
            system,
            cfg,
            t: 0.0,
            t_end: cfg.horizon,
            x: x0.to_vec(),
            mode: Mode::Smooth,
            h: cfg.max_step.min(0.01),
            k1: vec![0.0; x0.len()],
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            pending_events: Vec::new(),
        };
        if let Some(surf) = system.surface() {
            let s = surf.s(&st.x);
            st.mode = if s > cfg.event_tol {
                Mode::Plus
            } else if s < -cfg.event_tol {
                Mode::Minus
            } else {
                let (m, x) = st.resolve(st.x.clone())?;
                st.x = x;
                match m {
                    SurfaceMode::Sliding => {
                        project(surf, &mut st.x, cfg.event_tol);
                        Mode::Sliding
                    }
                    SurfaceMode::CrossUp => Mode::Plus,
                    SurfaceMode::CrossDown => Mode::Minus,
                }
            };
        }
        let mut k1 = vec![0.0; st.x.len()];
        st.field(st.mode, &st.x, &mut k1)?;
        st.k1 = k1;
        Ok(st)
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn state(&self) -> &[f64] {
        &self.x
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// Field value driving the current state.
    pub fn active_field(&self) -> &[f64] {
        &self.k1
    }

    pub fn set_end_time(&mut self, t_end: f64) {
        self.t_end = t_end;
    }

    pub fn is_done(&self) -> bool {
        self.t >= self.t_end
    }

    fn field(&self, mode: Mode, x: &[f64], out: &mut [f64]) -> Result<()> {
        match (mode, self.system.field()) {
            (Mode::Smooth, VectorField::Smooth(f)) => f.eval_into(x, out),
            (Mode::Plus, VectorField::Switched(s)) => s.plus.eval_into(x, out),
            (Mode::Minus, VectorField::Switched(s)) => s.minus.eval_into(x, out),
            (Mode::Sliding, VectorField::Switched(s)) => {
                slide_field_into(s, x, out)?;
            }
            _ => unreachable!("mode inconsistent with system kind"),
        }
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("vector field"));
        }
        Ok(())
    }

    /// One Dormand–Prince step of size `h` from `x` with `k1 = f(x)`.
    /// Returns the new state, `f(x_new)` and the scaled error norm.
    fn rk_try(&self, mode: Mode, x: &[f64], k1: &[f64], h: f64) -> Result<(Vec<f64>, Vec<f64>, f64)> {
        let n = x.len();
        let mut k: [Vec<f64>; 7] = std::array::from_fn(|_| vec![0.0; n]);
        k[0].copy_from_slice(k1);
        let mut y = vec![0.0; n];
        for stage in 1..7 {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(stage) {
                    acc += A[stage][j] * kj[i];
                }
                y[i] = x[i] + h * acc;
            }
            self.field(mode, &y, &mut k[stage])?;
        }
        // stage 7 is evaluated at the 5th-order solution (FSAL)
        let mut err = 0.0;
        for i in 0..n {
            let mut e = 0.0;
            for (j, kj) in k.iter().enumerate() {
                e += E[j] * kj[i];
            }
            let sc = self.cfg.abs_tol + self.cfg.rel_tol * x[i].abs().max(y[i].abs());
            err += (h * e / sc).powi(2);
        }
        let err = (err / n as f64).sqrt();
        Ok((y, k[6].clone(), err))
    }

    /// State reached from the start of `seg` after time `tau` (a single step in
    /// the segment's mode). Used to locate section crossings inside a segment.
    pub fn substep(&self, seg: &Segment, tau: f64) -> Result<Vec<f64>> {
        self.substep_from(seg.mode, &seg.x0, tau)
    }

    /// Single step of length `tau` from `x0` in `mode`.
    pub fn substep_in(&self, mode: Mode, x0: &[f64], tau: f64) -> Result<Vec<f64>> {
        self.substep_from(mode, x0, tau)
    }

    fn substep_from(&self, mode: Mode, x0: &[f64], tau: f64) -> Result<Vec<f64>> {
        if tau <= 0.0 {
            return Ok(x0.to_vec());
        }
        let mut k1 = vec![0.0; x0.len()];
        self.field(mode, x0, &mut k1)?;
        let (mut y, _, _) = self.rk_try(mode, x0, &k1, tau)?;
        if mode == Mode::Sliding {
            project(surface_of(self.system), &mut y, self.cfg.event_tol);
        }
        Ok(y)
    }

    fn random_unit(&mut self) -> Vec<f64> {
        let n = self.x.len();
        loop {
            let v: Vec<f64> = (0..n).map(|_| self.rng.random_range(-1.0..1.0)).collect();
            let nv = norm(&v);
            if nv > 1e-3 && nv <= 1.0 {
                return v.into_iter().map(|c| c / nv).collect();
            }
        }
    }

    /// [`detect_mode`] with the seeded-perturbation fallback at tangencies and
    /// repelling points. Returns the mode and the (possibly perturbed) state.
    fn resolve(&mut self, mut x: Vec<f64>) -> Result<(SurfaceMode, Vec<f64>)> {
        let surf = surface_of(self.system);
        let tol = self.cfg.event_tol;
        let origin = x.clone();
        for _ in 0..16 {
            let s = surf.s(&x);
            if s > tol {
                return Ok((SurfaceMode::CrossUp, x));
            }
            if s < -tol {
                return Ok((SurfaceMode::CrossDown, x));
            }
            match detect_mode(surf, &x, tol) {
                Ok(m) => return Ok((m, x)),
                Err(Error::DegenerateTangency { .. }) | Err(Error::RepellingSurface) => {
                    let d = self.random_unit();
                    let eps = self.cfg.tangency_perturbation;
                    x = origin.iter().zip(&d).map(|(o, di)| o + eps * di).collect();
                }
                Err(e) => return Err(e),
            }
        }
        Err(Error::Integration(
            "could not resolve surface mode after perturbation".into(),
        ))
    }

    /// Locate `s = 0` inside `(0, h]` when `side * s` goes from `> tol` to
    /// `< -tol`. Illinois-modified regula falsi with a bisection safeguard.
    fn locate_crossing(&self, mode: Mode, x0: &[f64], h: f64, side: f64, s_end: f64) -> Result<(f64, Vec<f64>)> {
        let surf = surface_of(self.system);
        let tol = self.cfg.event_tol;
        let (mut lo, mut hi) = (0.0, h);
        let mut flo = side * surf.s(x0);
        let mut fhi = side * s_end;
        let mut last_side = 0i8;
        for iter in 0..200 {
            let mut tau = if iter % 4 == 3 {
                0.5 * (lo + hi)
            } else {
                hi - fhi * (hi - lo) / (fhi - flo)
            };
            if !(tau > lo && tau < hi) {
                tau = 0.5 * (lo + hi);
            }
            let x = self.substep_from(mode, x0, tau)?;
            let f = side * surf.s(&x);
            if f.abs() <= tol || hi - lo <= 4.0 * f64::EPSILON * h.max(1.0) {
                return Ok((tau, x));
            }
            if f > 0.0 {
                lo = tau;
                flo = f;
                if last_side == 1 {
                    fhi *= 0.5;
                }
                last_side = 1;
            } else {
                hi = tau;
                fhi = f;
                if last_side == -1 {
                    flo *= 0.5;
                }
                last_side = -1;
            }
        }
        Err(Error::Integration("event location did not converge".into()))
    }

    /// Bisection for the first time the sliding weight leaves `[δ, 1-δ]`.
    fn locate_sliding_exit(&self, x0: &[f64], h: f64) -> Result<(f64, Vec<f64>, f64)> {
        let surf = surface_of(self.system);
        let delta = self.cfg.sliding_exit_margin;
        let inside = |x: &[f64]| -> Option<f64> {
            match sliding_weight(surf, x) {
                Ok(a) if a >= delta && a <= 1.0 - delta => None,
                Ok(a) => Some(a),
                Err(_) => Some(0.5),
            }
        };
        let (mut lo, mut hi) = (0.0, h);
        let mut x_lo = x0.to_vec();
        let mut alpha_out = match inside(&self.substep_from(Mode::Sliding, x0, h)?) {
            Some(a) => a,
            None => return Ok((h, self.substep_from(Mode::Sliding, x0, h)?, 0.5)),
        };
        for _ in 0..80 {
            if hi - lo <= 1e-13 * h.max(1e-3) {
                break;
            }
            let mid = 0.5 * (lo + hi);
            let xm = self.substep_from(Mode::Sliding, x0, mid)?;
            match inside(&xm) {
                None => {
                    lo = mid;
                    x_lo = xm;
                }
                Some(a) => {
                    hi = mid;
                    alpha_out = a;
                }
            }
        }
        Ok((lo, x_lo, alpha_out))
    }

    fn commit(&mut self, h: f64, x1: Vec<f64>, next_mode: Mode, event: Option<Event>) -> Result<Segment> {
        let t0 = self.t;
        let x0 = std::mem::replace(&mut self.x, x1);
        let mode = self.mode;
        self.t = if h >= self.t_end - t0 { self.t_end } else { t0 + h };
        self.mode = next_mode;
        let mut k1 = vec![0.0; self.x.len()];
        self.field(self.mode, &self.x, &mut k1)?;
        self.k1 = k1;
        Ok(Segment {
            t0,
            x0,
            t1: self.t,
            x1: self.x.clone(),
            mode,
            next_mode,
            event,
        })
    }

    fn mode_change_in_place(&mut self, next: Mode, event: Event) -> Result<()> {
        self.mode = next;
        let mut k1 = vec![0.0; self.x.len()];
        self.field(self.mode, &self.x, &mut k1)?;
        self.k1 = k1;
        self.pending_events.push(event);
        Ok(())
    }

    /// Events recorded without a time advance (mode switches at the current
    /// state). Drained by the caller after each `advance`.
    pub fn take_instant_events(&mut self) -> Vec<Event> {
        std::mem::take(&mut self.pending_events)
    }

    fn fail(&self, reason: impl Into<String>) -> StepFailure {
        StepFailure {
            t: self.t,
            x: self.x.clone(),
            reason: reason.into(),
        }
    }

    /// Integrate one accepted step (possibly shortened to an event).
    pub fn advance(&mut self) -> std::result::Result<Segment, StepFailure> {
        let tol = self.cfg.event_tol;
        loop {
            let remaining = self.t_end - self.t;
            if remaining <= 0.0 {
                return Err(self.fail("advance past end time"));
            }
            let hmin = 1e-14 * self.t.abs().max(1.0);
            let h = self.h.min(self.cfg.max_step).min(remaining);
            let attempt = self.rk_try(self.mode, &self.x, &self.k1, h);
            let (xn, _k7, err) = match attempt {
                Ok(v) if v.2 <= 1.0 => v,
                Ok((_, _, err)) => {
                    let fac = if err.is_finite() { (0.9 * err.powf(-0.2)).clamp(0.2, 0.9) } else { 0.25 };
                    self.h = h * fac;
                    if self.h < hmin {
                        return Err(self.fail(format!("step size underflow (h = {:e})", self.h)));
                    }
                    continue;
                }
                Err(e) => {
                    self.h = h * 0.25;
                    if self.h < hmin {
                        return Err(self.fail(format!("step size underflow after: {e}")));
                    }
                    continue;
                }
            };
            let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            let next_h = h * grow;
            match self.mode {
                Mode::Smooth => {
                    self.h = next_h;
                    return self.commit(h, xn, Mode::Smooth, None).map_err(|e| self.fail(e.to_string()));
                }
                Mode::Plus | Mode::Minus => {
                    let surf = surface_of(self.system);
                    let side = if self.mode == Mode::Plus { 1.0 } else { -1.0 };
                    let s0 = side * surf.s(&self.x);
                    let s_end = surf.s(&xn);
                    let s1 = side * s_end;
                    let armed = s0 > tol;
                    if s1 > tol || (!armed && s1 >= -tol) {
                        self.h = next_h;
                        let mode = self.mode;
                        return self.commit(h, xn, mode, None).map_err(|e| self.fail(e.to_string()));
                    }
                    if !armed {
                        // left the band on the wrong side: shrink, then accept a crossing
                        if h > 1e-9 {
                            self.h = h * 0.25;
                            continue;
                        }
                        let next = if self.mode == Mode::Plus { Mode::Minus } else { Mode::Plus };
                        let ev = Event {
                            t: self.t,
                            kind: EventKind::Crossing,
                            x: self.x.clone(),
                            s: surf.s(&self.x),
                        };
                        self.h = h;
                        self.mode_change_in_place(next, ev).map_err(|e| self.fail(e.to_string()))?;
                        continue;
                    }
                    let (tau, xe) = if s1.abs() <= tol {
                        (h, xn)
                    } else {
                        let mode = self.mode;
                        self.locate_crossing(mode, &self.x, h, side, s_end)
                            .map_err(|e| self.fail(e.to_string()))?
                    };
                    let s_e = surf.s(&xe);
                    let (m, mut x_after) = self.resolve(xe.clone()).map_err(|e| self.fail(e.to_string()))?;
                    let (next, kind) = match (self.mode, m) {
                        (_, SurfaceMode::Sliding) => {
                            project(surf, &mut x_after, tol);
                            (Mode::Sliding, Some(EventKind::SlidingEntry))
                        }
                        (Mode::Plus, SurfaceMode::CrossDown) => (Mode::Minus, Some(EventKind::Crossing)),
                        (Mode::Minus, SurfaceMode::CrossUp) => (Mode::Plus, Some(EventKind::Crossing)),
                        (mode, _) => (mode, None),
                    };
                    let event = kind.map(|kind| Event {
                        t: self.t + tau,
                        kind,
                        x: xe,
                        s: s_e,
                    });
                    self.h = next_h.min(h).max(1e-6 * self.cfg.max_step);
                    return self.commit(tau, x_after, next, event).map_err(|e| self.fail(e.to_string()));
                }
                Mode::Sliding => {
                    let surf = surface_of(self.system);
                    let mut xp = xn;
                    project(surf, &mut xp, tol);
                    let delta = self.cfg.sliding_exit_margin;
                    let ok = matches!(sliding_weight(surf, &xp), Ok(a) if a >= delta && a <= 1.0 - delta);
                    if ok {
                        self.h = next_h;
                        return self.commit(h, xp, Mode::Sliding, None).map_err(|e| self.fail(e.to_string()));
                    }
                    let start_ok = matches!(sliding_weight(surf, &self.x), Ok(a) if a >= delta && a <= 1.0 - delta);
                    let (tau, x_exit, alpha) = if start_ok {
                        self.locate_sliding_exit(&self.x, h).map_err(|e| self.fail(e.to_string()))?
                    } else {
                        let a = sliding_weight(surf, &self.x).unwrap_or(0.5);
                        (0.0, self.x.clone(), a)
                    };
                    let next = if alpha < 0.5 { Mode::Minus } else { Mode::Plus };
                    let ev = Event {
                        t: self.t + tau,
                        kind: EventKind::SlidingExit,
                        s: surf.s(&x_exit),
                        x: x_exit.clone(),
                    };
                    self.h = h.max(1e-6 * self.cfg.max_step);
                    if tau <= 0.0 {
                        self.mode_change_in_place(next, ev).map_err(|e| self.fail(e.to_string()))?;
                        continue;
                    }
                    return self.commit(tau, x_exit, next, Some(ev)).map_err(|e| self.fail(e.to_string()));
                }
            }
        }
    }
}

/// Integrate `system` from `x0` until the horizon, divergence, an integrator
/// failure, or (when `stop` is given) convergence onto the stationary set.
pub fn integrate(
    system: &PiecewiseSmoothSystem,
    x0: &[f64],
    cfg: &IntegratorConfig,
    stop: Option<&ConvergenceCriterion<'_>>,
) -> Result<Trajectory> {
    let mut stepper = FlowStepper::new(system, x0, cfg)?;
    let mut samples = vec![Sample {
        t: 0.0,
        x: stepper.state().to_vec(),
        mode: stepper.mode(),
    }];
    let mut events = Vec::new();
    let periodic = system.periodic_coordinates();
    let mut resting_since: Option<f64> = None;
    let check_rest = |st: &FlowStepper<'_>, since: &mut Option<f64>| -> bool {
        let Some(c) = stop else { return false };
        let d = c.set.distance(st.state(), periodic);
        if d < c.dist_tol && norm(st.active_field()) < c.field_tol {
            let t0 = *since.get_or_insert(st.time());
            st.time() - t0 >= c.window
        } else {
            *since = None;
            false
        }
    };
    if check_rest(&stepper, &mut resting_since) {
        return Ok(Trajectory {
            samples,
            events,
            status: TerminalStatus::Converged,
            failure: None,
        });
    }
    let status;
    let mut failure = None;
    loop {
        if stepper.is_done() {
            status = TerminalStatus::HorizonReached;
            break;
        }
        match stepper.advance() {
            Ok(seg) => {
                events.extend(stepper.take_instant_events());
                if let Some(ev) = seg.event {
                    events.push(ev);
                }
                samples.push(Sample {
                    t: seg.t1,
                    x: seg.x1,
                    mode: seg.next_mode,
                });
                if norm(stepper.state()) > cfg.divergence_radius {
                    status = TerminalStatus::Diverged;
                    break;
                }
                if check_rest(&stepper, &mut resting_since) {
                    status = TerminalStatus::Converged;
                    break;
                }
            }
            Err(f) => {
                events.extend(stepper.take_instant_events());
                failure = Some(f.reason);
                status = TerminalStatus::IntegratorFailure;
                break;
            }
        }
    }
    Ok(Trajectory {
        samples,
        events,
        status,
        failure,
    })
}

/// Single fixed-size step of the underlying tableau, for order checks.
#[doc(hidden)]
pub fn dopri_fixed_step(field: &super::system::SmoothField, x: &[f64], h: f64) -> Vec<f64> {
    let n = x.len();
    let mut k: [Vec<f64>; 7] = std::array::from_fn(|_| vec![0.0; n]);
    field.eval_into(x, &mut k[0]);
    let mut y = vec![0.0; n];
    for stage in 1..7 {
        for i in 0..n {
            let acc: f64 = (0..stage).map(|j| A[stage][j] * k[j][i]).sum();
            y[i] = x[i] + h * acc;
        }
        field.eval_into(&y, &mut k[stage]);
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::system::{SmoothField, SwitchingSurface};

    fn harmonic() -> PiecewiseSmoothSystem {
        PiecewiseSmoothSystem::smooth(SmoothField::new(2, |x, out| {
            out[0] = x[1];
            out[1] = -x[0];
        }))
    }

    #[test]
    fn harmonic_oscillator_accuracy() {
        let cfg = IntegratorConfig::default()
            .with_horizon(std::f64::consts::TAU)
            .with_tolerances(1e-11, 1e-13);
        let tr = integrate(&harmonic(), &[1.0, 0.0], &cfg, None).unwrap();
        assert_eq!(tr.status, TerminalStatus::HorizonReached);
        let end = &tr.last().x;
        assert!((end[0] - 1.0).abs() < 1e-8, "{end:?}");
        assert!(end[1].abs() < 1e-8);
        assert_eq!(tr.last().t, std::f64::consts::TAU);
    }

    #[test]
    fn tableau_is_fifth_order() {
        let f = SmoothField::new(1, |x, out| out[0] = -x[0] * x[0]);
        // x' = -x^2, x(0)=1 -> x(t) = 1/(1+t)
        let err = |h: f64| {
            let mut x = vec![1.0];
            let n = (1.0 / h).round() as usize;
            for _ in 0..n {
                x = dopri_fixed_step(&f, &x, h);
            }
            (x[0] - 0.5).abs()
        };
        let order = (err(0.025) / err(0.0125)).log2();
        assert!((order - 5.0).abs() < 0.4, "observed order {order}");
    }

    #[test]
    fn divergence_is_reported() {
        let sys = PiecewiseSmoothSystem::smooth(SmoothField::new(1, |x, out| out[0] = x[0]));
        let cfg = IntegratorConfig {
            divergence_radius: 100.0,
            ..IntegratorConfig::default()
        };
        let tr = integrate(&sys, &[1.0], &cfg, None).unwrap();
        assert_eq!(tr.status, TerminalStatus::Diverged);
        assert!(tr.last().x[0] > 100.0);
    }

    #[test]
    fn non_finite_field_fails() {
        let sys = PiecewiseSmoothSystem::smooth(SmoothField::new(1, |x, out| out[0] = 1.0 / (1.0 - x[0])));
        let tr = integrate(&sys, &[0.0], &IntegratorConfig::default(), None).unwrap();
        assert_eq!(tr.status, TerminalStatus::IntegratorFailure);
        assert!(tr.failure.is_some());
        assert!(tr.last().x[0] < 1.0);
    }

    #[test]
    fn relay_slides_along_surface() {
        // x' = (1, -sign x2) reaches x2 = 0 at t = 1 and slides with (1, 0)
        let plus = SmoothField::new(2, |_, out| {
            out[0] = 1.0;
            out[1] = -1.0;
        });
        let minus = SmoothField::new(2, |_, out| {
            out[0] = 1.0;
            out[1] = 1.0;
        });
        let sys = PiecewiseSmoothSystem::switched(SwitchingSurface::linear(vec![0.0, 1.0], plus, minus).unwrap());
        let cfg = IntegratorConfig::default().with_horizon(3.0);
        let tr = integrate(&sys, &[0.0, 1.0], &cfg, None).unwrap();
        assert_eq!(tr.events.len(), 1);
        assert_eq!(tr.events[0].kind, EventKind::SlidingEntry);
        assert!((tr.events[0].t - 1.0).abs() < 1e-9);
        let end = &tr.last().x;
        assert!((end[0] - 3.0).abs() < 1e-9);
        assert!(end[1].abs() < 1e-9);
        assert_eq!(tr.last().mode, Mode::Sliding);
    }

    #[test]
    fn sliding_exit_when_weight_leaves_unit_interval() {
        // f+ = (1, -1), f- = (1, 1 - x1): sliding while x1 < 1, then crossing down
        let plus = SmoothField::new(2, |_, out| {
            out[0] = 1.0;
            out[1] = -1.0;
        });
        let minus = SmoothField::new(2, |x, out| {
            out[0] = 1.0;
            out[1] = 1.0 - x[0];
        });
        let sys = PiecewiseSmoothSystem::switched(SwitchingSurface::linear(vec![0.0, 1.0], plus, minus).unwrap());
        let cfg = IntegratorConfig::default().with_horizon(2.0);
        let tr = integrate(&sys, &[0.0, 0.5], &cfg, None).unwrap();
        let kinds: Vec<_> = tr.events.iter().map(|e| e.kind).collect();
        assert_eq!(kinds, vec![EventKind::SlidingEntry, EventKind::SlidingExit]);
        assert!((tr.events[1].x[0] - 1.0).abs() < 1e-6, "{:?}", tr.events[1]);
        assert_eq!(tr.last().mode, Mode::Minus);
        assert!(tr.last().x[1] < 0.0);
    }

    #[test]
    fn crossing_events_are_localized() {
        // rotation with a kink: both branches rotate, plus one faster
        let plus = SmoothField::new(2, |x, out| {
            out[0] = 2.0 * x[1];
            out[1] = -2.0 * x[0];
        });
        let minus = SmoothField::new(2, |x, out| {
            out[0] = x[1];
            out[1] = -x[0];
        });
        let sys = PiecewiseSmoothSystem::switched(SwitchingSurface::linear(vec![0.0, 1.0], plus, minus).unwrap());
        let cfg = IntegratorConfig::default().with_horizon(20.0);
        let tr = integrate(&sys, &[0.0, 1.0], &cfg, None).unwrap();
        assert!(tr.events.len() > 4);
        for e in &tr.events {
            assert_eq!(e.kind, EventKind::Crossing);
            assert!(e.s.abs() <= cfg.event_tol);
        }
        // the radius is preserved by both branches
        for s in &tr.samples {
            assert!((norm(&s.x) - 1.0).abs() < 1e-6);
        }
    }
}
