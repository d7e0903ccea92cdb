//! Test-only oracles: adaptive quadrature, the exact delta-shell pole, and the
//! reference oracle setup.
#![allow(dead_code, clippy::excessive_precision)]

use std::f64::consts::PI;

use deltadrift::resonance;
use deltadrift::PhysicalParams;
use num_complex::Complex64;

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, &x) in XGK.iter().take(7).enumerate() {
        let dx = half * x;
        let pair = f(centre - dx) + f(centre + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, (kronrod - gauss).abs() * half)
}

fn adapt<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let (value, err) = gk15(f, a, b);
    if err <= tol.max(1e-15 * value.abs()) || depth == 0 {
        return value;
    }
    let mid = 0.5 * (a + b);
    adapt(f, a, mid, 0.5 * tol, depth - 1) + adapt(f, mid, b, 0.5 * tol, depth - 1)
}

/// Adaptive Gauss–Kronrod (7/15) integral with absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    adapt(&f, a, b, tol, 40)
}

pub fn integrate_complex<F: Fn(f64) -> Complex64>(f: F, a: f64, b: f64, tol: f64) -> Complex64 {
    Complex64::new(integrate(|x| f(x).re, a, b, tol), integrate(|x| f(x).im, a, b, tol))
}

/// Exact escape rate of the quasi-bound level near `nπ/ā` for a static delta
/// of constant strength `v0` in front of a hard wall: the outgoing-wave pole
/// `-k e^{-ikā} = (2μV̄0/ħ²) sin(kā)`, rate `-2 Im E / ħ`.
pub fn pole_rate(params: &PhysicalParams, v0: f64, n: u32) -> f64 {
    let a = params.a_bar;
    let gamma = 2.0 * params.mu * v0 / (params.hbar * params.hbar);
    let i = Complex64::new(0.0, 1.0);
    let f = |k: Complex64| -k * (-i * k * a).exp() - gamma * (k * a).sin();
    let mut k = Complex64::new(n as f64 * PI / a, -0.05 / a);
    for _ in 0..200 {
        let h = Complex64::new(1e-7, 0.0);
        let df = (f(k + h) - f(k - h)) / (2.0 * h);
        let step = f(k) / df;
        k -= step;
        if step.norm() < 1e-14 {
            break;
        }
    }
    let energy = params.hbar * params.hbar * k * k / (2.0 * params.mu);
    -2.0 * energy.im / params.hbar
}

/// Decay constant of channel 2 under the delta at the level energy in the
/// reference oracle setup.
pub const REFERENCE_KAPPA: f64 = 2.0;

/// Reference oracle setup: `μ = ħ = 1`, `ā = π`, `R0 = 1`, level 1, analytic
/// strength `v0`, and a two-channel model whose Green's-function reduction
/// gives `|V̄0| = v0` with channel 2 closed by `κ = 2` at `Ē_1`.
pub fn reference_params(v0: f64, v: f64) -> PhysicalParams {
    let base = PhysicalParams {
        a_bar: PI,
        u0_bar: (REFERENCE_KAPPA * v0).sqrt(),
        v,
        v0_override: Some(v0),
        ..Default::default()
    };
    let v2_offset = resonance::matched_offset(&base, 1, v0).expect("matching");
    PhysicalParams { v2_offset, ..base }
}

pub fn rel_err(value: f64, reference: f64) -> f64 {
    (value - reference).abs() / reference.abs()
}
