mod common;

use deltadrift::scaling::{box_eigenstate, ScalingFrame};
use num_complex::Complex64;
use proptest::prelude::*;

const QUAD_TOL: f64 = 1e-12;

fn tau_quadrature(frame: &ScalingFrame, t: f64) -> f64 {
    common::integrate(|s| frame.scale_factor(s).unwrap().powi(-2), 0.0, t, QUAD_TOL)
}

#[test]
fn tau_matches_quadrature_on_reference_grid() {
    for v in [-0.05, 0.0, 0.5, 2.0] {
        let frame = ScalingFrame::new(1.0, v).unwrap();
        for i in 0..=100 {
            let t = 0.1 * i as f64;
            let closed = frame.tau(t).unwrap();
            let quad = tau_quadrature(&frame, t);
            let err = if quad == 0.0 { closed.abs() } else { common::rel_err(closed, quad) };
            assert!(err <= 1e-12, "v={v} t={t}: closed {closed} quadrature {quad}");
        }
    }
}

#[test]
fn tau_saturates_for_expanding_frame() {
    for (r0, v) in [(1.0, 0.2), (0.5, 1.0), (2.0, 0.05)] {
        let frame = ScalingFrame::new(r0, v).unwrap();
        let limit = frame.tau_limit().unwrap();
        assert!((frame.tau(1e6).unwrap() - limit).abs() < 1e-3);
        let mut last = 0.0;
        for i in 1..200 {
            let tau = frame.tau(i as f64 * 3.7).unwrap();
            assert!(tau > last && tau < limit);
            last = tau;
        }
    }
}

proptest! {
    #[test]
    fn tau_agrees_with_quadrature(r0 in 0.2f64..5.0, v in -0.05f64..3.0, frac in 0.0f64..1.0) {
        let frame = ScalingFrame::new(r0, v).unwrap();
        // stay where R > 0.2 r0
        let t_max = if v < 0.0 { (0.8 * r0 / -v).min(10.0) } else { 10.0 };
        let t = frac * t_max;
        let quad = tau_quadrature(&frame, t);
        let closed = frame.tau(t).unwrap();
        prop_assert!((closed - quad).abs() <= 1e-12 * quad.abs().max(1e-300) + 1e-15);
    }

    #[test]
    fn time_at_tau_inverts_tau(r0 in 0.2f64..5.0, v in 0.0f64..3.0, t in 0.0f64..50.0) {
        let frame = ScalingFrame::new(r0, v).unwrap();
        let back = frame.time_at_tau(frame.tau(t).unwrap()).unwrap();
        prop_assert!((back - t).abs() <= 1e-9 * t.max(1.0));
    }

    #[test]
    fn coordinate_maps_are_inverse(r0 in 0.2f64..5.0, v in 0.0f64..3.0, t in 0.0f64..20.0, x in 0.0f64..30.0) {
        let frame = ScalingFrame::new(r0, v).unwrap();
        let back = frame.to_lab(frame.to_rescaled(x, t).unwrap(), t).unwrap();
        prop_assert!((back - x).abs() <= 1e-12 * x.max(1.0));
    }
}

fn lab_norm(frame: &ScalingFrame, n: u32, a_bar: f64, t: f64) -> f64 {
    let state = box_eigenstate(n, a_bar, frame.mu, frame.hbar);
    let edge = a_bar * frame.scale_factor(t).unwrap();
    common::integrate(|x| frame.lab_wavefunction(&state, x, t).unwrap().norm_sqr(), 0.0, edge, QUAD_TOL)
}

#[test]
fn lab_wavefunction_preserves_norm() {
    for (r0, v, mu, hbar) in [(1.0, 0.0, 1.0, 1.0), (1.0, 0.5, 1.0, 1.0), (2.0, 1.5, 0.7, 1.3), (0.5, -0.03, 2.0, 0.5)] {
        let frame = ScalingFrame::with_units(r0, v, mu, hbar).unwrap();
        for n in 1..=4 {
            for t in [0.0, 0.3, 2.0, 7.5] {
                let norm = lab_norm(&frame, n, 2.5, t);
                assert!((norm - 1.0).abs() <= 1e-10, "r0={r0} v={v} n={n} t={t}: {norm}");
            }
        }
    }
}

#[test]
fn mapped_states_stay_orthonormal() {
    let frame = ScalingFrame::new(1.0, 0.7).unwrap();
    let a_bar = 3.0;
    for t in [0.0, 0.5, 3.0, 12.0] {
        let edge = a_bar * frame.scale_factor(t).unwrap();
        for k in 1..=3 {
            for l in 1..=3 {
                let sk = box_eigenstate(k, a_bar, 1.0, 1.0);
                let sl = box_eigenstate(l, a_bar, 1.0, 1.0);
                let overlap = common::integrate_complex(
                    |x| {
                        frame.lab_wavefunction(&sk, x, t).unwrap().conj()
                            * frame.lab_wavefunction(&sl, x, t).unwrap()
                    },
                    0.0,
                    edge,
                    QUAD_TOL,
                );
                let expected = if k == l { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
                assert!((overlap - expected).norm() < 1e-10, "t={t} k={k} l={l}: {overlap}");
            }
        }
    }
}

/// Largest `|iħ ∂ₜφ + (ħ²/2μ) ∂ₓ²φ|` over interior points, with central
/// differences of step `h` in both variables.
fn tdse_residual(frame: &ScalingFrame, t: f64, h: f64) -> f64 {
    let a_bar = 2.0;
    let state = box_eigenstate(2, a_bar, frame.mu, frame.hbar);
    let phi = |x: f64, t: f64| frame.lab_wavefunction(&state, x, t).unwrap();
    let i = Complex64::new(0.0, 1.0);
    let edge = a_bar * frame.scale_factor(t).unwrap();
    (1..20)
        .map(|j| {
            let x = edge * (0.1 + 0.8 * j as f64 / 20.0);
            let dt = (phi(x, t + h) - phi(x, t - h)) / (2.0 * h);
            let dxx = (phi(x + h, t) - 2.0 * phi(x, t) + phi(x - h, t)) / (h * h);
            (i * frame.hbar * dt + frame.hbar * frame.hbar / (2.0 * frame.mu) * dxx).norm()
        })
        .fold(0.0, f64::max)
}

#[test]
fn gauge_solution_satisfies_lab_tdse() {
    for (v, mu, hbar) in [(0.5, 1.0, 1.0), (1.5, 0.8, 1.2), (-0.05, 1.0, 1.0)] {
        let frame = ScalingFrame::with_units(1.0, v, mu, hbar).unwrap();
        let steps = [2e-2, 1e-2, 5e-3, 2.5e-3];
        let residuals: Vec<f64> = steps.iter().map(|&h| tdse_residual(&frame, 1.3, h)).collect();
        for pair in residuals.windows(2) {
            let order = (pair[0] / pair[1]).log2();
            assert!(order >= 1.0, "v={v}: residuals {residuals:?}");
        }
    }
}
