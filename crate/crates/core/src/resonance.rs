//! Single-channel reduction and the resonance decay law.
//!
//! Eliminating the second channel through its Green's function leaves a
//! delta potential of effective strength `V̄0 = Ū0² G₂⁰(Ē)` in channel 1.
//! Together with the hard wall at `x̄ = 0` this traps quasi-bound states near
//! `k̄_n = nπ/ā`, whose escape rate follows from the Lorentzian expansion of
//! the scattering amplitude `A²(Ē) ≈ D²(Δ + δ)² + H²`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::params::PhysicalParams;
use crate::scaling::ScalingFrame;

/// Diagonal element of `(Ē - H₂₂)⁻¹` at the delta position for a flat second
/// surface at `v2_offset`: `-μ / (ħ² κ)` with `κ = sqrt(2μ(V₂ - Ē)) / ħ`.
///
/// Only the closed channel (`Ē < V₂`) yields a real value.
pub fn greens_second_channel(params: &PhysicalParams, energy: f64) -> Result<f64> {
    let gap = params.v2_offset - energy;
    if !(gap > 0.0) {
        return Err(Error::OpenChannel {
            energy,
            offset: params.v2_offset,
        });
    }
    let kappa = (2.0 * params.mu * gap).sqrt() / params.hbar;
    Ok(-params.mu / (params.hbar * params.hbar * kappa))
}

/// `V̄0 = Ū0² G₂⁰(Ē)`, or the override when one is set.
pub fn effective_strength(params: &PhysicalParams, energy: f64) -> Result<f64> {
    if let Some(v0) = params.v0_override {
        return Ok(v0);
    }
    if params.u0_bar == 0.0 {
        return Ok(0.0);
    }
    Ok(params.u0_bar * params.u0_bar * greens_second_channel(params, energy)?)
}

/// Offset `V₂` that makes the Green's-function reduction at level `n` produce
/// an effective strength of magnitude `strength` for the given `u0_bar`.
///
/// The reduction always yields an attractive (negative) strength, so only the
/// magnitude can be matched. `D²`, `H²` and the decay rate depend on `V̄0²`.
pub fn matched_offset(params: &PhysicalParams, n: u32, strength: f64) -> Result<f64> {
    if !(strength > 0.0) || params.u0_bar == 0.0 {
        return Err(Error::InvalidArgument(
            "matching needs a positive target strength and non-zero u0_bar".into(),
        ));
    }
    let e_n = level_energy(params, n)?;
    let hb2 = params.hbar * params.hbar;
    let kappa = params.u0_bar * params.u0_bar * params.mu / (hb2 * strength);
    Ok(e_n + hb2 * kappa * kappa / (2.0 * params.mu))
}

fn level_wavenumber(params: &PhysicalParams, n: u32) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("resonance index must be at least 1".into()));
    }
    Ok(n as f64 * PI / params.a_bar)
}

fn level_energy(params: &PhysicalParams, n: u32) -> Result<f64> {
    let k = level_wavenumber(params, n)?;
    Ok(params.hbar * params.hbar * k * k / (2.0 * params.mu))
}

/// Dimensionless coupling `2μV̄0 / (ħ² k̄)`.
#[inline]
fn coupling_ratio(params: &PhysicalParams, v0_bar: f64, k_bar: f64) -> f64 {
    2.0 * params.mu * v0_bar / (params.hbar * params.hbar * k_bar)
}

/// Squared outer amplitude `A²(k̄)` for a unit inner sine.
pub fn amplitude_sq(params: &PhysicalParams, v0_bar: f64, k_bar: f64) -> f64 {
    let (s, c) = (k_bar * params.a_bar).sin_cos();
    let inner = c + coupling_ratio(params, v0_bar, k_bar) * s;
    s * s + inner * inner
}

/// Real scattering solution `sin(k̄x̄)` inside and `A cos(k̄x̄ + θ)` outside the delta.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatteringState {
    pub k_bar: f64,
    pub amplitude_a: f64,
    pub theta: f64,
    a_bar: f64,
}

impl ScatteringState {
    /// Solve the matching conditions at `x̄ = ā` (continuity and the derivative
    /// jump `2μV̄0/ħ² · φ(ā)`).
    pub fn solve(params: &PhysicalParams, v0_bar: f64, k_bar: f64) -> Result<Self> {
        if !(k_bar > 0.0) {
            return Err(Error::InvalidArgument(format!("wavenumber must be positive, got {k_bar}")));
        }
        let ka = k_bar * params.a_bar;
        let (s, c) = ka.sin_cos();
        // A cos(ka + θ) = sin(ka),  A sin(ka + θ) = -(cos(ka) + g sin(ka))
        let along = s;
        let across = -(c + coupling_ratio(params, v0_bar, k_bar) * s);
        Ok(Self {
            k_bar,
            amplitude_a: along.hypot(across),
            theta: across.atan2(along) - ka,
            a_bar: params.a_bar,
        })
    }

    pub fn value(&self, x_bar: f64) -> f64 {
        if x_bar < self.a_bar {
            (self.k_bar * x_bar).sin()
        } else {
            self.amplitude_a * (self.k_bar * x_bar + self.theta).cos()
        }
    }
}

/// Per-level quantities of the Lorentzian expansion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonanceParams {
    pub n: u32,
    pub k_bar_n: f64,
    pub e_bar_n: f64,
    pub v0_bar: f64,
    pub d_sq: f64,
    pub h_sq: f64,
    pub delta_shift: f64,
    pub g: f64,
    hbar: f64,
    h_over_d: f64,
}

impl ResonanceParams {
    /// `|H/D| = (ħ² k̄_n / (μ ā)) / (1 + g²)`.
    pub fn h_over_d(&self) -> f64 {
        self.h_over_d
    }

    /// Escape rate in rescaled time, `2|H/D| / ħ`.
    pub fn decay_rate(&self) -> f64 {
        2.0 * self.h_over_d / self.hbar
    }
}

pub fn resonance_params(params: &PhysicalParams, n: u32) -> Result<ResonanceParams> {
    let k = level_wavenumber(params, n)?;
    let hb2 = params.hbar * params.hbar;
    let e_n = hb2 * k * k / (2.0 * params.mu);
    let v0 = effective_strength(params, e_n)?;
    let g = coupling_ratio(params, v0, k);
    let bracket = 1.0 + g * g;
    let scale = params.mu * params.a_bar / (hb2 * k);
    Ok(ResonanceParams {
        n,
        k_bar_n: k,
        e_bar_n: e_n,
        v0_bar: v0,
        d_sq: scale * scale * bracket,
        h_sq: 1.0 / bracket,
        delta_shift: 2.0 * v0 / (params.a_bar * bracket),
        g,
        hbar: params.hbar,
        h_over_d: 1.0 / (scale * bracket),
    })
}

/// `D²(Δ + δ)² + H²`.
pub fn lorentzian_approx(res: &ResonanceParams, delta_e: f64) -> f64 {
    let shifted = delta_e + res.delta_shift;
    res.d_sq * shifted * shifted + res.h_sq
}

/// `α_n(t) = 2 |H/D| τ(t) / ħ`.
pub fn decay_exponent(params: &PhysicalParams, n: u32, t: f64) -> Result<f64> {
    let tau = ScalingFrame::from_params(params)?.tau(t)?;
    Ok(resonance_params(params, n)?.decay_rate() * tau)
}

/// Asymptotic non-adiabatic probability `1 - exp(-2|H/D| / (ħ R0 v))` for an
/// expanding frame. A static or contracting frame drives `τ` without bound,
/// so the limit is 1.
pub fn saturation_probability(params: &PhysicalParams, n: u32) -> Result<f64> {
    let frame = ScalingFrame::from_params(params)?;
    let rate = resonance_params(params, n)?.decay_rate();
    match frame.tau_limit() {
        Some(tau_max) => clamp_probability(1.0 - (-rate * tau_max).exp()),
        None => Ok(1.0),
    }
}

/// Clamp floating-point overshoot of at most 1e-15; anything larger is a bug.
pub(crate) fn clamp_probability(p: f64) -> Result<f64> {
    const SLACK: f64 = 1e-15;
    if (-SLACK..=1.0 + SLACK).contains(&p) {
        Ok(p.clamp(0.0, 1.0))
    } else {
        Err(Error::Consistency(format!("probability {p} outside [0, 1]")))
    }
}

/// `P(t) ≈ exp(-α_n(t))`.
pub fn survival_probability(params: &PhysicalParams, n: u32, t: f64) -> Result<f64> {
    clamp_probability((-decay_exponent(params, n, t)?).exp())
}

/// `1 - P(t)`.
pub fn nonadiabatic_probability(params: &PhysicalParams, n: u32, t: f64) -> Result<f64> {
    clamp_probability(-(-decay_exponent(params, n, t)?).exp_m1())
}
