//! Non-adiabatic transitions between two channels coupled by a moving delta
//! potential.
//!
//! * [`params`]: physical parameters and their validation.
//! * [`scaling`]: the `x̄ = x/R(t)` transform, rescaled time and gauge map.
//! * [`resonance`]: Green's-function reduction, resonance parameters and the
//!   analytic survival law.
//! * [`tdse`]: an independent lab-frame two-channel propagator.
//! * [`cli`]: configuration parsing and report generation for the
//!   `deltadrift` binary.

// `!(x <= tol)` comparisons are deliberate: NaN must fail them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod params;
pub mod resonance;
pub mod scaling;
pub mod tdse;

pub use error::{Error, Result};
pub use params::{validate, CheckedParams, PhysicalParams};
pub use resonance::{ResonanceParams, ScatteringState};
pub use scaling::{RescaledEigenstate, ScalingFrame};
pub use tdse::{DecayCurve, DecaySample, Grid, OracleSettings, SolverSettings, TwoChannelState};
