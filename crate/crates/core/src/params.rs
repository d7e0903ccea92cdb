//! Physical parameters shared by every other module.
//!
//! All quantities are carried explicitly. The defaults are natural units
//! (`mu = hbar = 1`), but nothing assumes them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of the two-channel model with a moving delta coupling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// Particle mass.
    pub mu: f64,
    /// Reduced Planck constant.
    pub hbar: f64,
    /// Bare coupling strength of the delta potential in the rescaled frame.
    pub u0_bar: f64,
    /// Constant energy offset of the second diabatic surface (rescaled frame).
    pub v2_offset: f64,
    /// Rescaled delta position; the lab position is `a_bar * R(t)`.
    pub a_bar: f64,
    /// Scale factor at `t = 0`.
    pub r0: f64,
    /// Scaling velocity in `R(t) = r0 + v t`.
    pub v: f64,
    /// Real effective strength; bypasses the Green's-function reduction when set.
    pub v0_override: Option<f64>,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self {
            mu: 1.0,
            hbar: 1.0,
            u0_bar: 0.0,
            v2_offset: 0.0,
            a_bar: 1.0,
            r0: 1.0,
            v: 0.0,
            v0_override: None,
        }
    }
}

impl PhysicalParams {
    /// Scale factor `R(t) = r0 + v t` without a positivity check.
    #[inline]
    pub fn scale_at(&self, t: f64) -> f64 {
        self.r0 + self.v * t
    }

    /// Lab-frame position of the delta at time `t`.
    #[inline]
    pub fn delta_position(&self, t: f64) -> f64 {
        self.a_bar * self.scale_at(t)
    }
}

/// Parameters that passed [`validate`] for a given time horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckedParams {
    params: PhysicalParams,
    horizon: f64,
}

impl CheckedParams {
    pub fn params(&self) -> &PhysicalParams {
        &self.params
    }

    /// Largest time for which `R(t) > 0` was verified.
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn into_inner(self) -> PhysicalParams {
        self.params
    }
}

impl std::ops::Deref for CheckedParams {
    type Target = PhysicalParams;

    fn deref(&self) -> &PhysicalParams {
        &self.params
    }
}

fn positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::NonPositiveParameter { name, value })
    }
}

fn finite(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("`{name}` must be finite, got {value}")))
    }
}

/// Check every invariant and that `R(t) > 0` on `[0, horizon]`.
pub fn validate(params: PhysicalParams, horizon: f64) -> Result<CheckedParams> {
    positive("mu", params.mu)?;
    positive("hbar", params.hbar)?;
    positive("a_bar", params.a_bar)?;
    positive("r0", params.r0)?;
    finite("u0_bar", params.u0_bar)?;
    finite("v2_offset", params.v2_offset)?;
    finite("v", params.v)?;
    if let Some(v0) = params.v0_override {
        finite("v0_override", v0)?;
    }
    if !(horizon.is_finite() && horizon >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "time horizon must be finite and non-negative, got {horizon}"
        )));
    }
    // R is linear, so positivity at both ends covers the interval.
    let r_end = params.scale_at(horizon);
    if r_end <= 0.0 {
        return Err(Error::NonPositiveScale { t: horizon, r: r_end });
    }
    Ok(CheckedParams { params, horizon })
}
