//! Adaptive integration of smooth and piecewise-smooth (Filippov) systems.

mod filippov;
mod integrator;
mod system;
mod trajectory;

pub use filippov::{detect_mode, lie_derivative, slide_field, sliding_weight, LieDerivative, Mode, SurfaceMode};
pub use integrator::{dopri_fixed_step, integrate, FlowStepper, Segment, StepFailure};
pub use system::{FieldFn, PiecewiseSmoothSystem, ScalarFn, SetValuedGap, SmoothField, SwitchingSurface, VectorField};
pub use trajectory::{
    ConvergenceCriterion, Event, EventKind, IntegratorConfig, Sample, TerminalStatus, Trajectory,
};

pub(crate) use system::{dot, norm};
