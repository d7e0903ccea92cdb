//! Time-dependent scaling transform.
//!
//! With `R(t) = R0 + v t` and `x̄ = x / R(t)`, a potential of the form
//! `Ū(x/R) / R²` becomes stationary in the rescaled time
//! `τ = ∫₀ᵗ ds / R²(s) = t / (R0 R(t))`. A rescaled eigenstate `ψ_k(x̄)`
//! with energy `Ē_k` maps back to the lab frame as
//!
//! ```text
//! φ_k(x, t) = R^{-1/2} · exp(i μ v x² / (2 ħ R)) · exp(-i Ē_k τ / ħ) · ψ_k(x / R)
//! ```

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::params::PhysicalParams;

/// Linear scale factor together with the constants the gauge phase needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingFrame {
    pub r0: f64,
    pub v: f64,
    pub mu: f64,
    pub hbar: f64,
}

impl ScalingFrame {
    /// Frame in natural units (`mu = hbar = 1`).
    pub fn new(r0: f64, v: f64) -> Result<Self> {
        Self::with_units(r0, v, 1.0, 1.0)
    }

    pub fn with_units(r0: f64, v: f64, mu: f64, hbar: f64) -> Result<Self> {
        for (name, value) in [("r0", r0), ("mu", mu), ("hbar", hbar)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::NonPositiveParameter { name, value });
            }
        }
        if !v.is_finite() {
            return Err(Error::InvalidArgument(format!("scaling velocity must be finite, got {v}")));
        }
        Ok(Self { r0, v, mu, hbar })
    }

    pub fn from_params(params: &PhysicalParams) -> Result<Self> {
        Self::with_units(params.r0, params.v, params.mu, params.hbar)
    }

    /// `R(t) = R0 + v t`.
    pub fn scale_factor(&self, t: f64) -> Result<f64> {
        let r = self.r0 + self.v * t;
        if r > 0.0 {
            Ok(r)
        } else {
            Err(Error::NonPositiveScale { t, r })
        }
    }

    /// Rescaled time `τ(t) = t / (R0 R(t))`.
    ///
    /// `R` is linear and `R(0) > 0`, so `R(t) > 0` implies positivity on the
    /// whole interval between 0 and `t`.
    pub fn tau(&self, t: f64) -> Result<f64> {
        let r = self.scale_factor(t)?;
        Ok(t / (self.r0 * r))
    }

    /// Inverse of [`tau`](Self::tau): the lab time at which the rescaled clock reads `tau`.
    pub fn time_at_tau(&self, tau: f64) -> Result<f64> {
        let denom = 1.0 - self.r0 * self.v * tau;
        if denom <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "rescaled time {tau} is beyond the saturation value {}",
                1.0 / (self.r0 * self.v)
            )));
        }
        let t = tau * self.r0 * self.r0 / denom;
        self.scale_factor(t)?;
        Ok(t)
    }

    /// `lim_{t→∞} τ(t) = 1/(R0 v)` for an expanding frame, `None` otherwise.
    pub fn tau_limit(&self) -> Option<f64> {
        (self.v > 0.0).then(|| 1.0 / (self.r0 * self.v))
    }

    /// `x̄ = x / R(t)`.
    pub fn to_rescaled(&self, x: f64, t: f64) -> Result<f64> {
        Ok(x / self.scale_factor(t)?)
    }

    /// `x = x̄ R(t)`.
    pub fn to_lab(&self, x_bar: f64, t: f64) -> Result<f64> {
        Ok(x_bar * self.scale_factor(t)?)
    }

    /// Lab-frame wavefunction generated by a rescaled eigenstate.
    pub fn lab_wavefunction<F>(&self, state: &RescaledEigenstate<F>, x: f64, t: f64) -> Result<Complex64>
    where
        F: Fn(f64) -> Complex64,
    {
        let r = self.scale_factor(t)?;
        let tau = t / (self.r0 * r);
        let gauge = self.mu * self.v * x * x / (2.0 * self.hbar * r);
        let dynamic = -state.energy_bar * tau / self.hbar;
        let phase = Complex64::from_polar(1.0, gauge + dynamic);
        Ok(phase * state.amplitude(x / r) / r.sqrt())
    }
}

/// Stationary state of the rescaled problem, sampled on demand.
#[derive(Clone)]
pub struct RescaledEigenstate<F> {
    pub k_bar: f64,
    pub energy_bar: f64,
    amplitude: F,
}

impl<F> RescaledEigenstate<F>
where
    F: Fn(f64) -> Complex64,
{
    /// Free-particle relation `Ē = ħ² k̄² / (2μ)` fixes the energy.
    pub fn new(k_bar: f64, mu: f64, hbar: f64, amplitude: F) -> Self {
        Self {
            k_bar,
            energy_bar: hbar * hbar * k_bar * k_bar / (2.0 * mu),
            amplitude,
        }
    }

    #[inline]
    pub fn amplitude(&self, x_bar: f64) -> Complex64 {
        (self.amplitude)(x_bar)
    }
}

impl<F> std::fmt::Debug for RescaledEigenstate<F> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RescaledEigenstate")
            .field("k_bar", &self.k_bar)
            .field("energy_bar", &self.energy_bar)
            .finish_non_exhaustive()
    }
}

/// Normalized box state `sqrt(2/a) sin(nπx̄/a)` on `[0, a]`, zero outside.
pub fn box_eigenstate(
    n: u32,
    a_bar: f64,
    mu: f64,
    hbar: f64,
) -> RescaledEigenstate<impl Fn(f64) -> Complex64 + Clone> {
    let k = n as f64 * std::f64::consts::PI / a_bar;
    let norm = (2.0 / a_bar).sqrt();
    RescaledEigenstate::new(k, mu, hbar, move |x: f64| {
        if (0.0..=a_bar).contains(&x) {
            Complex64::new(norm * (k * x).sin(), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}
