//! Simulation and verification toolkit for global stability of nonlinear
//! control models, including Filippov systems with a discontinuity surface.
//!
//! The crate is organized bottom-up:
//!
//! * [`dynamics`] integrates smooth and piecewise-smooth vector fields with
//!   event location and sliding-mode motion.
//! * [`models`] builds the concrete systems (Barbashin–Krasovsky example,
//!   phase-locked loop, Keldysh flutter model, general Lurie systems).
//! * [`verify`] audits Lyapunov-theorem hypotheses by sampling.
//! * [`oscillation`] locates limit cycles with a Poincaré return map and
//!   classifies them as self-excited or hidden.
//! * [`describing`] is the harmonic-balance (describing function) analysis of
//!   the Keldysh model.
//! * [`io`] and [`sweep`] serialize results and run parameter sweeps.

pub mod describing;
pub mod dynamics;
pub mod error;
pub mod io;
pub mod models;
pub mod oscillation;
pub mod sweep;
pub mod verify;

pub use error::{Error, Result};
