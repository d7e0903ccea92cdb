//! Numerical two-channel propagator used as an independent check of the
//! analytic decay law.
//!
//! Everything here lives in the lab frame: the coupling is a normalized
//! Gaussian of width `w` centred on `a(t) = ā R(t)` with strength `Ū0 / R(t)`,
//! channel 2 sits at `V₂ / R(t)²` (so the Hamiltonian keeps the scaling form),
//! and both channels are confined to `[0, L]` with Dirichlet walls.
//!
//! One step is a Strang split: a Crank–Nicolson half step of the kinetic
//! operator in each channel, an exact 2×2 exponential of the local potential
//! matrix at the midpoint time, and a second kinetic half step.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::params::{CheckedParams, PhysicalParams};
use crate::resonance::{self, ResonanceParams};
use crate::scaling::ScalingFrame;

/// Relative norm drift tolerated over a whole run.
pub const NORM_DRIFT_TOL: f64 = 1e-8;
/// Fraction of the norm allowed beyond `0.9 L` inside the fit window.
pub const LEAK_TOL: f64 = 1e-4;
/// Largest channel-2 norm allowed when the coupling is switched off.
pub const ISOLATION_TOL: f64 = 1e-14;
/// Per-step norm change that aborts a run.
const STEP_DIVERGENCE_TOL: f64 = 1e-6;
/// Minimum sampling density of the analytic wavelength.
const MIN_POINTS_PER_WAVELENGTH: f64 = 16.0;
/// Gaussian support, in widths.
const PROFILE_CUTOFF: f64 = 6.0;

/// Uniform grid on `[0, L]` with Dirichlet endpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub length: f64,
    pub n_points: usize,
    pub dx: f64,
}

impl Grid {
    pub fn new(length: f64, n_points: usize) -> Result<Self> {
        if n_points < 3 {
            return Err(Error::InvalidArgument(format!("grid needs at least 3 points, got {n_points}")));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidArgument(format!("grid length must be positive, got {length}")));
        }
        Ok(Self {
            length,
            n_points,
            dx: length / (n_points - 1) as f64,
        })
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.dx
    }

    /// Trapezoidal integral of nodal values `f` over `[0, upper]`.
    pub fn integrate_to(&self, f: &[f64], upper: f64) -> f64 {
        debug_assert_eq!(f.len(), self.n_points);
        if upper <= 0.0 {
            return 0.0;
        }
        let upper = upper.min(self.length);
        let last = ((upper / self.dx).floor() as usize).min(self.n_points - 1);
        let mut sum = 0.0;
        for i in 0..last {
            sum += 0.5 * (f[i] + f[i + 1]);
        }
        sum *= self.dx;
        let rest = upper - self.x(last);
        if rest > 0.0 && last + 1 < self.n_points {
            let frac = rest / self.dx;
            let f_end = f[last] + frac * (f[last + 1] - f[last]);
            sum += 0.5 * rest * (f[last] + f_end);
        }
        sum
    }
}

/// Grid of length `pad · ā · max R` over `[0, t_final]`, checked for resolution
/// of the level-`n` wavelength at the smallest scale reached.
pub fn build_grid(params: &PhysicalParams, n: u32, t_final: f64, n_points: usize, pad: f64) -> Result<Grid> {
    if !(pad > 1.0) {
        return Err(Error::InvalidArgument(format!("padding factor must exceed 1, got {pad}")));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("resonance index must be at least 1".into()));
    }
    let frame = ScalingFrame::from_params(params)?;
    let r_end = frame.scale_factor(t_final)?;
    let grid = Grid::new(pad * params.a_bar * params.r0.max(r_end), n_points)?;
    let k_n = n as f64 * PI / params.a_bar;
    let wavelength = 2.0 * PI * params.r0.min(r_end) / k_n;
    let points_per_wavelength = wavelength / grid.dx;
    if points_per_wavelength < MIN_POINTS_PER_WAVELENGTH {
        return Err(Error::UnderResolved { points_per_wavelength });
    }
    Ok(grid)
}

/// Complex amplitudes of both channels on the grid at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoChannelState {
    pub phi1: Vec<Complex64>,
    pub phi2: Vec<Complex64>,
    pub t: f64,
}

impl TwoChannelState {
    pub fn density1(&self) -> Vec<f64> {
        self.phi1.iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn channel_norm1(&self, grid: &Grid) -> f64 {
        self.phi1.iter().map(|z| z.norm_sqr()).sum::<f64>() * grid.dx
    }

    pub fn channel_norm2(&self, grid: &Grid) -> f64 {
        self.phi2.iter().map(|z| z.norm_sqr()).sum::<f64>() * grid.dx
    }

    /// Total two-channel norm (endpoints vanish, so trapezoid = plain sum).
    pub fn norm(&self, grid: &Grid) -> f64 {
        self.channel_norm1(grid) + self.channel_norm2(grid)
    }

    /// Fraction of the total norm located beyond `0.9 L`.
    pub fn boundary_leak(&self, grid: &Grid) -> f64 {
        let start = ((0.9 * grid.length / grid.dx).ceil() as usize).min(grid.n_points);
        let outer: f64 = self.phi1[start..]
            .iter()
            .chain(&self.phi2[start..])
            .map(|z| z.norm_sqr())
            .sum();
        outer * grid.dx / self.norm(grid)
    }
}

/// Box state `sqrt(2/a0) sin(nπx/a0)` on `[0, a0]` in channel 1, channel 2 empty.
pub fn initial_state(grid: &Grid, params: &PhysicalParams, n: u32) -> Result<TwoChannelState> {
    let a0 = params.delta_position(0.0);
    if a0 >= grid.length {
        return Err(Error::DomainExceeded { position: a0, length: grid.length });
    }
    let k = n as f64 * PI / a0;
    let amp = (2.0 / a0).sqrt();
    let mut phi1: Vec<Complex64> = (0..grid.n_points)
        .map(|i| {
            let x = grid.x(i);
            if x < a0 {
                Complex64::new(amp * (k * x).sin(), 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    phi1[0] = Complex64::new(0.0, 0.0);
    let norm: f64 = phi1.iter().map(|z| z.norm_sqr()).sum::<f64>() * grid.dx;
    let scale = 1.0 / norm.sqrt();
    phi1.iter_mut().for_each(|z| *z *= scale);
    Ok(TwoChannelState {
        phi1,
        phi2: vec![Complex64::new(0.0, 0.0); grid.n_points],
        t: 0.0,
    })
}

/// Nonzero part of the coupling profile: first node index and values.
fn coupling_window(grid: &Grid, params: &PhysicalParams, t: f64, w: f64) -> Result<(usize, Vec<f64>)> {
    if !(w >= 2.0 * grid.dx * (1.0 - 1e-12)) {
        return Err(Error::InvalidArgument(format!(
            "coupling width {w} is below two grid spacings ({})",
            2.0 * grid.dx
        )));
    }
    let r = ScalingFrame::from_params(params)?.scale_factor(t)?;
    if params.u0_bar == 0.0 {
        return Ok((0, Vec::new()));
    }
    let centre = params.a_bar * r;
    if centre >= grid.length {
        return Err(Error::DomainExceeded { position: centre, length: grid.length });
    }
    let reach = PROFILE_CUTOFF * w;
    let lo = (((centre - reach) / grid.dx).ceil().max(1.0)) as usize;
    let hi = (((centre + reach) / grid.dx).floor() as usize).min(grid.n_points - 2);
    let mut values: Vec<f64> = (lo..=hi)
        .map(|i| {
            let z = (grid.x(i) - centre) / w;
            (-0.5 * z * z).exp()
        })
        .collect();
    let mass: f64 = values.iter().sum::<f64>() * grid.dx;
    let strength = params.u0_bar / r;
    values.iter_mut().for_each(|v| *v *= strength / mass);
    Ok((lo, values))
}

/// Regularized lab-frame coupling `(Ū0/R(t)) N_w(x - a(t))` on every grid node.
pub fn coupling_profile(grid: &Grid, params: &PhysicalParams, t: f64, w: f64) -> Result<Vec<f64>> {
    let (lo, values) = coupling_window(grid, params, t, w)?;
    let mut out = vec![0.0; grid.n_points];
    out[lo..lo + values.len()].copy_from_slice(&values);
    Ok(out)
}

/// Lab-frame offset of channel 2, `V₂ / R(t)²`.
#[inline]
fn lab_offset(params: &PhysicalParams, r: f64) -> f64 {
    params.v2_offset / (r * r)
}

/// Precomputed Thomas factorization of `1 + i (h/2) T / (2ħ)` on the interior nodes.
#[derive(Debug, Clone)]
struct KineticHalfStep {
    h: f64,
    diag_rhs: Complex64,
    off: Complex64,
    c_prime: Vec<Complex64>,
    inv_denom: Vec<Complex64>,
}

impl KineticHalfStep {
    fn new(grid: &Grid, params: &PhysicalParams, h: f64) -> Self {
        let m = grid.n_points - 2;
        let kin = params.hbar * params.hbar / (params.mu * grid.dx * grid.dx);
        let beta = Complex64::new(0.0, 0.25 * h / params.hbar);
        let diag = Complex64::new(1.0, 0.0) + beta * kin;
        let off = beta * (-0.5 * kin);
        let mut c_prime = Vec::with_capacity(m);
        let mut inv_denom = Vec::with_capacity(m);
        let mut prev = Complex64::new(0.0, 0.0);
        for _ in 0..m {
            let inv = (diag - off * prev).inv();
            prev = off * inv;
            c_prime.push(prev);
            inv_denom.push(inv);
        }
        Self {
            h,
            diag_rhs: Complex64::new(1.0, 0.0) - beta * kin,
            off,
            c_prime,
            inv_denom,
        }
    }

    /// In-place Crank–Nicolson update; `scratch` must hold `n_points` values.
    fn apply(&self, psi: &mut [Complex64], scratch: &mut [Complex64]) {
        let n = psi.len();
        let zero = Complex64::new(0.0, 0.0);
        // right-hand side on interior nodes 1..n-1
        for j in 1..n - 1 {
            scratch[j] = self.diag_rhs * psi[j] - self.off * (psi[j - 1] + psi[j + 1]);
        }
        let mut prev = zero;
        for (k, j) in (1..n - 1).enumerate() {
            prev = (scratch[j] - self.off * prev) * self.inv_denom[k];
            scratch[j] = prev;
        }
        psi[n - 2] = scratch[n - 2];
        for (k, j) in (1..n - 2).enumerate().rev() {
            psi[j] = scratch[j] - self.c_prime[k] * psi[j + 1];
        }
        psi[0] = zero;
        psi[n - 1] = zero;
    }
}

/// `exp(-i H θ)` for `H = [[0, c], [c, d]]`, returned as `(u11, u12, u22)`.
#[inline]
fn local_propagator(c: f64, d: f64, theta: f64) -> (Complex64, Complex64, Complex64) {
    let half = 0.5 * d;
    let r = half.hypot(c);
    let rt = r * theta;
    let sinc = if rt.abs() < 1e-8 {
        theta * (1.0 - rt * rt / 6.0)
    } else {
        rt.sin() / r
    };
    let cos = rt.cos();
    let phase = Complex64::from_polar(1.0, -half * theta);
    let i = Complex64::new(0.0, 1.0);
    (
        phase * (cos + i * half * sinc),
        phase * (-i * c * sinc),
        phase * (cos - i * half * sinc),
    )
}

/// Strang-split propagator for a fixed grid, parameter set and coupling width.
#[derive(Debug, Clone)]
pub struct Propagator {
    grid: Grid,
    params: PhysicalParams,
    frame: ScalingFrame,
    width: f64,
    kinetic: Option<KineticHalfStep>,
    scratch: Vec<Complex64>,
}

impl Propagator {
    pub fn new(grid: Grid, params: &PhysicalParams, width: f64) -> Result<Self> {
        if !(width >= 2.0 * grid.dx * (1.0 - 1e-12)) {
            return Err(Error::InvalidArgument(format!(
                "coupling width {width} is below two grid spacings ({})",
                2.0 * grid.dx
            )));
        }
        Ok(Self {
            grid,
            params: *params,
            frame: ScalingFrame::from_params(params)?,
            width,
            kinetic: None,
            scratch: vec![Complex64::new(0.0, 0.0); grid.n_points],
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    /// Advance both channels by `dt`; returns the relative norm change of the step.
    pub fn step(&mut self, state: &mut TwoChannelState, dt: f64) -> Result<f64> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
        }
        let before = state.norm(&self.grid);
        let refactor = match &self.kinetic {
            Some(k) => k.h != dt,
            None => true,
        };
        if refactor {
            self.kinetic = Some(KineticHalfStep::new(&self.grid, &self.params, dt));
        }

        self.kinetic_half(state);

        let t_mid = state.t + 0.5 * dt;
        let r = self.frame.scale_factor(t_mid)?;
        let offset = lab_offset(&self.params, r);
        let theta = dt / self.params.hbar;
        let (lo, coupling) = coupling_window(&self.grid, &self.params, t_mid, self.width)?;
        // Away from the delta only the channel-2 offset acts.
        let far = Complex64::from_polar(1.0, -offset * theta);
        for z in state.phi2.iter_mut() {
            *z *= far;
        }
        for (k, &c) in coupling.iter().enumerate() {
            let j = lo + k;
            let (u11, u12, u22) = local_propagator(c, offset, theta);
            let a = state.phi1[j];
            // undo the far-field phase applied above before the exact update
            let b = state.phi2[j] * far.conj();
            state.phi1[j] = u11 * a + u12 * b;
            state.phi2[j] = u12 * a + u22 * b;
        }

        self.kinetic_half(state);
        state.t += dt;

        let after = state.norm(&self.grid);
        let drift = (after - before).abs() / before;
        if drift > STEP_DIVERGENCE_TOL || !after.is_finite() {
            return Err(Error::SolverDiverged { drift });
        }
        Ok(drift)
    }

    fn kinetic_half(&mut self, state: &mut TwoChannelState) {
        let kinetic = self.kinetic.as_ref().expect("kinetic factor prepared");
        kinetic.apply(&mut state.phi1, &mut self.scratch);
        kinetic.apply(&mut state.phi2, &mut self.scratch);
    }
}

/// `∫₀^{a(t)} |φ₁(x,t)|² dx` divided by `∫₀^{a(0)} |φ₁(x,0)|² dx`.
pub fn survival_numeric(
    grid: &Grid,
    params: &PhysicalParams,
    initial: &TwoChannelState,
    state: &TwoChannelState,
) -> Result<f64> {
    let reference = grid.integrate_to(&initial.density1(), params.delta_position(0.0));
    region_ratio(grid, params, state, reference, false)
}

/// Diagnostic variant of [`survival_numeric`] that also counts channel 2 inside `[0, a(t)]`.
pub fn survival_numeric_both_channels(
    grid: &Grid,
    params: &PhysicalParams,
    initial: &TwoChannelState,
    state: &TwoChannelState,
) -> Result<f64> {
    let reference = grid.integrate_to(&initial.density1(), params.delta_position(0.0));
    region_ratio(grid, params, state, reference, true)
}

fn region_ratio(
    grid: &Grid,
    params: &PhysicalParams,
    state: &TwoChannelState,
    reference: f64,
    both: bool,
) -> Result<f64> {
    let r = ScalingFrame::from_params(params)?.scale_factor(state.t)?;
    let edge = params.a_bar * r;
    if edge >= grid.length {
        return Err(Error::DomainExceeded { position: edge, length: grid.length });
    }
    let density: Vec<f64> = if both {
        state
            .phi1
            .iter()
            .zip(&state.phi2)
            .map(|(a, b)| a.norm_sqr() + b.norm_sqr())
            .collect()
    } else {
        state.density1()
    };
    Ok(grid.integrate_to(&density, edge) / reference)
}

/// One point of a decay curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecaySample {
    pub t: f64,
    pub tau: f64,
    pub p_numeric: f64,
    pub p_analytic: f64,
}

/// Least-squares line through `(τ, -ln P)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub rate: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub used: usize,
}

/// Slope of `-ln P_numeric` against `τ` over the samples with `τ` in `window`.
pub fn fit_decay_rate(samples: &[DecaySample], window: (f64, f64)) -> Result<DecayFit> {
    let (lo, hi) = window;
    let points: Vec<(f64, f64)> = samples
        .iter()
        .filter(|s| s.tau >= lo && s.tau <= hi)
        .map(|s| (s.tau, s.p_numeric))
        .collect();
    if points.len() < 10 {
        return Err(Error::InsufficientSamples { found: points.len() });
    }
    if let Some(&(tau, p)) = points.iter().find(|(_, p)| !(*p > 0.0)) {
        return Err(Error::InvalidArgument(format!("non-positive probability {p} at tau = {tau}")));
    }
    let n = points.len() as f64;
    let (sx, sy) = points
        .iter()
        .fold((0.0, 0.0), |(sx, sy), &(x, p)| (sx + x, sy - p.ln()));
    let (mx, my) = (sx / n, sy / n);
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &(x, p) in &points {
        let (dx, dy) = (x - mx, -p.ln() - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("fit window contains a single tau value".into()));
    }
    let rate = sxy / sxx;
    let intercept = my - rate * mx;
    let ss_res = (syy - rate * sxy).max(0.0);
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Ok(DecayFit {
        rate,
        intercept,
        r_squared,
        used: points.len(),
    })
}

/// Skip the first 10% of the sampled τ range and stop before `P` first drops below 0.1.
pub fn default_fit_window(samples: &[DecaySample]) -> (f64, f64) {
    let (Some(first), Some(last)) = (samples.first(), samples.last()) else {
        return (0.0, 0.0);
    };
    let lo = first.tau + 0.1 * (last.tau - first.tau);
    let hi = samples
        .windows(2)
        .find(|pair| pair[1].p_numeric < 0.1)
        .map_or(last.tau, |pair| pair[0].tau);
    (lo, hi)
}

/// Discretization controls for an oracle run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub n_points: usize,
    pub pad: f64,
    /// Coupling width in grid spacings.
    pub w_over_dx: f64,
    /// Time steps per level period `2πħ/Ē_n`. Two-channel runs with a closed
    /// second channel need several thousand for the fitted rate to settle.
    pub dt_divisor: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            n_points: 4096,
            pad: 8.0,
            w_over_dx: 4.0,
            dt_divisor: 8000.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleSettings {
    pub n: u32,
    pub t_final: f64,
    /// Number of intervals; samples are spaced uniformly in τ.
    pub sample_count: usize,
    pub solver: SolverSettings,
    pub fit_window: Option<(f64, f64)>,
    pub include_channel2: bool,
}

/// Measured solver health of one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrityReport {
    pub max_norm_drift: f64,
    pub max_leak: f64,
    pub max_leak_in_window: f64,
    pub max_channel2_norm: f64,
    pub zero_coupling: bool,
}

impl IntegrityReport {
    /// Human-readable list of every violated bound.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.max_norm_drift <= NORM_DRIFT_TOL) {
            out.push(format!("norm drift {:e} exceeds {NORM_DRIFT_TOL:e}", self.max_norm_drift));
        }
        if !(self.max_leak_in_window <= LEAK_TOL) {
            out.push(format!(
                "boundary leak {:e} inside the fit window exceeds {LEAK_TOL:e}",
                self.max_leak_in_window
            ));
        }
        if self.zero_coupling && !(self.max_channel2_norm <= ISOLATION_TOL) {
            out.push(format!(
                "channel 2 norm {:e} without coupling exceeds {ISOLATION_TOL:e}",
                self.max_channel2_norm
            ));
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.violations().is_empty()
    }
}

/// Sampled survival curve, its fit, and the analytic comparator.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayCurve {
    pub samples: Vec<DecaySample>,
    pub fit: DecayFit,
    pub fit_window: (f64, f64),
}

impl DecayCurve {
    pub fn fitted_rate(&self) -> f64 {
        self.fit.rate
    }
}

#[derive(Debug, Clone)]
pub struct OracleRun {
    pub curve: DecayCurve,
    pub integrity: IntegrityReport,
    pub resonance: ResonanceParams,
    pub grid: Grid,
    pub width: f64,
    pub dt: f64,
    pub steps: usize,
}

/// Propagate the box state and record the survival probability at
/// `sample_count + 1` times spaced uniformly in τ.
pub fn run_oracle(params: &CheckedParams, settings: &OracleSettings) -> Result<OracleRun> {
    let p = params.params();
    if settings.t_final > params.horizon() {
        return Err(Error::InvalidArgument(format!(
            "t_final {} exceeds the validated horizon {}",
            settings.t_final,
            params.horizon()
        )));
    }
    if !(settings.t_final > 0.0) {
        return Err(Error::InvalidArgument("t_final must be positive".into()));
    }
    if settings.sample_count < 1 {
        return Err(Error::InvalidArgument("sample_count must be at least 1".into()));
    }
    if !(settings.solver.dt_divisor > 0.0) {
        return Err(Error::InvalidArgument("dt_divisor must be positive".into()));
    }
    let resonance = resonance::resonance_params(p, settings.n)?;
    // The oracle itself always runs the two-channel model; refuse an open one.
    if p.u0_bar != 0.0 && p.v0_override.is_some() {
        resonance::greens_second_channel(p, resonance.e_bar_n)?;
    }

    let frame = ScalingFrame::from_params(p)?;
    let grid = build_grid(p, settings.n, settings.t_final, settings.solver.n_points, settings.solver.pad)?;
    let width = settings.solver.w_over_dx * grid.dx;
    let mut propagator = Propagator::new(grid, p, width)?;
    let initial = initial_state(&grid, p, settings.n)?;
    let mut state = initial.clone();
    let dt_nominal = 2.0 * PI * p.hbar / resonance.e_bar_n / settings.solver.dt_divisor;

    let reference = grid.integrate_to(&initial.density1(), p.delta_position(0.0));
    let norm0 = initial.norm(&grid);
    let tau_final = frame.tau(settings.t_final)?;
    let zero_coupling = p.u0_bar == 0.0;

    let measure = |state: &TwoChannelState| -> Result<(f64, f64)> {
        let tau = frame.tau(state.t)?;
        let p_num = region_ratio(&grid, p, state, reference, settings.include_channel2)?;
        Ok((tau, p_num))
    };

    let mut samples = Vec::with_capacity(settings.sample_count + 1);
    let mut leaks = Vec::with_capacity(settings.sample_count + 1);
    let mut max_drift: f64 = 0.0;
    let mut max_c2: f64 = 0.0;
    let mut steps = 0usize;

    let (tau0, p0) = measure(&state)?;
    samples.push(DecaySample {
        t: 0.0,
        tau: tau0,
        p_numeric: p0,
        p_analytic: resonance::survival_probability(p, settings.n, 0.0)?,
    });
    leaks.push(state.boundary_leak(&grid));

    for j in 1..=settings.sample_count {
        let target = if j == settings.sample_count {
            settings.t_final
        } else {
            frame.time_at_tau(tau_final * j as f64 / settings.sample_count as f64)?
        };
        let span = target - state.t;
        let sub = (span / dt_nominal).ceil().max(1.0) as usize;
        let h = span / sub as f64;
        for _ in 0..sub {
            propagator.step(&mut state, h)?;
            steps += 1;
            if zero_coupling {
                max_c2 = max_c2.max(state.channel_norm2(&grid));
            }
        }
        state.t = target;
        max_drift = max_drift.max((state.norm(&grid) - norm0).abs() / norm0);
        let (tau, p_num) = measure(&state)?;
        samples.push(DecaySample {
            t: target,
            tau,
            p_numeric: p_num,
            p_analytic: resonance::survival_probability(p, settings.n, target)?,
        });
        leaks.push(state.boundary_leak(&grid));
    }

    let fit_window = settings.fit_window.unwrap_or_else(|| default_fit_window(&samples));
    let fit = fit_decay_rate(&samples, fit_window)?;
    let in_window = |s: &DecaySample| s.tau >= fit_window.0 && s.tau <= fit_window.1;
    let max_leak_in_window = samples
        .iter()
        .zip(&leaks)
        .filter(|(s, _)| in_window(s))
        .map(|(_, &l)| l)
        .fold(0.0, f64::max);

    Ok(OracleRun {
        curve: DecayCurve { samples, fit, fit_window },
        integrity: IntegrityReport {
            max_norm_drift: max_drift,
            max_leak: leaks.iter().copied().fold(0.0, f64::max),
            max_leak_in_window,
            max_channel2_norm: max_c2,
            zero_coupling,
        },
        resonance,
        grid,
        width,
        dt: dt_nominal,
        steps,
    })
}
