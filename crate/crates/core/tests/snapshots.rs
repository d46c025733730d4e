//! Frozen outputs of the reference model. A change here means the model or a
//! solver changed behaviour.

use fpnet_core::diagnostics::{continuity_probe, contraction_estimate, default_steps, probe_config, DEFAULT_FD_STEP};
use fpnet_core::lorawan::{build_model, SweepParameters, STATE_DIM};
use fpnet_core::nested::{inner_solution_curve, NestedConfig};
use fpnet_core::{picard_solve, restrict, solve_trajectory, SolverConfig, UnitPoint};

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1e-300)
}

fn trajectory_steps() -> Vec<f64> {
    let model = build_model(&SweepParameters::default()).unwrap();
    let (_, traj) = solve_trajectory(&model, &UnitPoint::midpoint(STATE_DIM), &SolverConfig::default()).unwrap();
    traj.iter().filter_map(|t| t.step_norm).collect()
}

fn curve() -> Vec<f64> {
    let model = build_model(&SweepParameters::default()).unwrap();
    let samples: Vec<f64> = (1..=9).map(|k| k as f64 / 10.0).collect();
    inner_solution_curve(&model, 0, &[0.5; STATE_DIM - 1], 6, &samples, &NestedConfig::default())
        .unwrap()
        .into_iter()
        .map(|(_, v)| v)
        .collect()
}

fn lipschitz() -> Vec<f64> {
    let model = build_model(&SweepParameters::default()).unwrap();
    continuity_probe(&model, 0, &[0.5; STATE_DIM - 1], 6, &default_steps(), &probe_config())
        .unwrap()
        .lipschitz_estimates
}

fn rho() -> f64 {
    let model = build_model(&SweepParameters::default()).unwrap();
    let fixed = picard_solve(
        &model,
        &UnitPoint::midpoint(STATE_DIM),
        &SolverConfig::with_tolerance(1e-12),
    )
    .unwrap();
    contraction_estimate(&model, &fixed.solution, DEFAULT_FD_STEP)
        .unwrap()
        .spectral_radius_estimate
}

const STEPS: [f64; 5] = [
    1.4205040111869824,
    0.37175559410974895,
    0.014645021725338509,
    0.002427947924865799,
    0.0001701721781711874,
];

const CURVE: [f64; 9] = [
    0.9385629288986728,
    0.9498771316745749,
    0.9576739854979353,
    0.9630067829037556,
    0.9666851328490778,
    0.9692783410064711,
    0.9711639735213788,
    0.9725829843817146,
    0.9736860948745318,
];

const LIPSCHITZ: [f64; 10] = [
    0.030060727448533164,
    0.030322341399857677,
    0.030454556956538426,
    0.030521020126350606,
    0.03055434096559395,
    0.030571023747683057,
    0.03057937077102224,
    0.030583545625972874,
    0.030585633555801905,
    0.0305866774738206,
];

const RHO: f64 = 0.09927277482332043;

#[test]
fn trajectory_from_midpoint() {
    let steps = trajectory_steps();
    assert_eq!(steps.len(), STEPS.len());
    for (a, b) in steps.iter().zip(STEPS) {
        assert!(close(*a, b, 1e-9), "{a} vs {b}");
    }
    assert!(steps.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn inner_solution_curve_on_downlink_axis() {
    let values = curve();
    for (a, b) in values.iter().zip(CURVE) {
        assert!(close(*a, b, 1e-9), "{a} vs {b}");
    }
    // a better uplink acknowledgment rate lowers retransmission load
    assert!(values.windows(2).all(|w| w[1] > w[0]));

    let model = build_model(&SweepParameters::default()).unwrap();
    for (k, v) in values.iter().enumerate() {
        let mut frozen = [0.5; STATE_DIM - 1];
        frozen[5] = (k + 1) as f64 / 10.0;
        let r = restrict(&model, 0, &frozen).unwrap();
        assert!((r.evaluate(*v) - v).abs() < 1e-9);
    }
}

#[test]
fn continuity_slopes() {
    let l = lipschitz();
    for (a, b) in l.iter().zip(LIPSCHITZ) {
        assert!(close(*a, b, 1e-6), "{a} vs {b}");
    }
}

#[test]
fn contraction_at_default_fixed_point() {
    let r = rho();
    assert!(close(r, RHO, 1e-6), "{r}");
}
