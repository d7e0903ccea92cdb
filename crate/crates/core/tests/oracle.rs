mod common;

use deltadrift::tdse::{run_oracle, OracleRun, OracleSettings, SolverSettings, NORM_DRIFT_TOL};
use deltadrift::{validate, PhysicalParams};
use rayon::prelude::*;

fn reference_settings(w_over_dx: f64, n_points: usize) -> OracleSettings {
    OracleSettings {
        n: 1,
        t_final: 20.0,
        sample_count: 400,
        solver: SolverSettings { n_points, w_over_dx, ..SolverSettings::default() },
        fit_window: None,
        include_channel2: false,
    }
}

fn run(params: PhysicalParams, settings: &OracleSettings) -> OracleRun {
    let checked = validate(params, settings.t_final).unwrap();
    run_oracle(&checked, settings).unwrap()
}

#[test]
fn fitted_rate_converges_in_width_and_grid() {
    let params = common::reference_params(1.0, 0.0);
    let configs = [(8.0, 4096), (4.0, 4096), (2.0, 4096), (2.0, 8192)];
    let runs: Vec<OracleRun> = configs
        .par_iter()
        .map(|&(w, n)| run(params, &reference_settings(w, n)))
        .collect();
    let rates: Vec<f64> = runs.iter().map(|r| r.curve.fitted_rate()).collect();
    for r in &runs {
        assert!(r.integrity.max_norm_drift <= NORM_DRIFT_TOL);
    }
    let first = common::rel_err(rates[1], rates[0]);
    let second = common::rel_err(rates[2], rates[1]);
    assert!(second < first, "width changes not decreasing: {rates:?}");
    assert!(second < 0.02, "final width change {second}: {rates:?}");
    let grid = common::rel_err(rates[3], rates[2]);
    assert!(grid < 0.02, "grid doubling changed rate by {grid}: {rates:?}");
}

#[test]
fn uncoupled_channel_stays_empty() {
    let params = PhysicalParams {
        a_bar: std::f64::consts::PI,
        u0_bar: 0.0,
        v2_offset: 2.5,
        v: 0.2,
        ..Default::default()
    };
    let settings = OracleSettings {
        t_final: 4.0,
        sample_count: 40,
        solver: SolverSettings { n_points: 1024, dt_divisor: 400.0, ..SolverSettings::default() },
        ..reference_settings(4.0, 1024)
    };
    let out = run(params, &settings);
    assert!(out.integrity.zero_coupling);
    assert!(out.integrity.max_channel2_norm <= 1e-14);
    assert!(out.integrity.max_norm_drift <= NORM_DRIFT_TOL);
}

#[test]
fn moving_coupling_conserves_norm() {
    let params = common::reference_params(1.0, 0.2);
    let settings = OracleSettings {
        t_final: 5.0,
        sample_count: 50,
        solver: SolverSettings { n_points: 2048, dt_divisor: 2000.0, ..SolverSettings::default() },
        ..reference_settings(4.0, 2048)
    };
    let out = run(params, &settings);
    assert!(out.integrity.max_norm_drift <= NORM_DRIFT_TOL);
    let first = out.curve.samples.first().unwrap().p_numeric;
    let last = out.curve.samples.last().unwrap().p_numeric;
    assert!((first - 1.0).abs() < 1e-12);
    assert!(last < first);
}

#[test]
fn tight_box_is_flagged_not_accepted() {
    let params = common::reference_params(0.5, 0.0);
    let settings = OracleSettings {
        solver: SolverSettings { n_points: 1024, pad: 1.5, dt_divisor: 1000.0, ..SolverSettings::default() },
        ..reference_settings(4.0, 1024)
    };
    let out = run(params, &settings);
    assert!(!out.integrity.is_valid());
    assert!(out.integrity.violations().iter().any(|v| v.contains("leak")));
}
