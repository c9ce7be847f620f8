use std::sync::Arc;

use roughflow::continuity::{batched_weak_form, push_forward, weak_terms, ParticleMeasure};
use roughflow::fbm::{FbmSampler, FbmSpec};
use roughflow::flow::drift::SineDrift;
use roughflow::flow::stack::eta_preset;
use roughflow::flow::{ito_residual, solve_flow, FlowEnsemble};
use roughflow::rough_path::{RoughPathGrid, TimeGrid};

const GAMMA: f64 = 0.28;
const LEVEL: usize = 3;

fn setup(
    particles: usize,
) -> (
    ParticleMeasure,
    FlowEnsemble,
    Arc<RoughPathGrid>,
    TimeGrid,
    roughflow::rough_path::PathSamples,
) {
    let grid = TimeGrid::dyadic(1.0, 6).unwrap();
    let driver = FbmSampler::new(FbmSpec::new(0.3, 1, grid.clone(), 11).unwrap())
        .unwrap()
        .sample();
    let mu = ParticleMeasure::gaussian(1, 0.5, particles).unwrap();
    let b = SineDrift {
        dim: 1,
        amplitude: 1.0,
    };
    let flow = solve_flow(&b, &grid, &driver, mu.points(), 4).unwrap();
    let x = Arc::new(flow.fine_driver_lift(LEVEL).unwrap());
    (mu, flow, x, grid, driver)
}

#[test]
fn weak_terms_are_linear_in_weights() {
    let (mu, flow, x, _, _) = setup(40);
    let eta = eta_preset("gauss-bump-1", 1, LEVEL + 1).unwrap();
    let n = mu.len();
    let w1: Vec<f64> = (0..n).map(|i| ((i * 7) % 5) as f64 / 10.0).collect();
    let w2: Vec<f64> = (0..n).map(|i| ((i * 3) % 4) as f64 / 8.0 - 0.2).collect();
    let sum: Vec<f64> = w1.iter().zip(&w2).map(|(a, b)| 2.0 * a - 3.0 * b).collect();
    let t1 = weak_terms(
        &mu.with_weights(w1).unwrap(),
        &flow,
        &x,
        eta.as_ref(),
        GAMMA,
        1.0,
    )
    .unwrap();
    let t2 = weak_terms(
        &mu.with_weights(w2).unwrap(),
        &flow,
        &x,
        eta.as_ref(),
        GAMMA,
        1.0,
    )
    .unwrap();
    let ts = weak_terms(
        &mu.with_weights(sum).unwrap(),
        &flow,
        &x,
        eta.as_ref(),
        GAMMA,
        1.0,
    )
    .unwrap();
    for (a, b, c) in [
        (ts.mu_t, t1.mu_t, t2.mu_t),
        (ts.mu_0, t1.mu_0, t2.mu_0),
        (ts.time_term, t1.time_term, t2.time_term),
        (ts.rough_term, t1.rough_term, t2.rough_term),
    ] {
        assert!(
            (a - (2.0 * b - 3.0 * c)).abs() < 1e-12,
            "{a} vs {}",
            2.0 * b - 3.0 * c
        );
    }
}

#[test]
fn measure_residual_is_weighted_particle_residual() {
    let (mu, flow, x, _, _) = setup(24);
    let eta = eta_preset("gauss-bump-2", 1, LEVEL + 1).unwrap();
    for t in [0.5, 1.0] {
        let total = weak_terms(&mu, &flow, &x, eta.as_ref(), GAMMA, t)
            .unwrap()
            .residual();
        let particles: f64 = mu
            .weights()
            .iter()
            .enumerate()
            .map(|(i, w)| w * ito_residual(eta.as_ref(), &flow, &x, GAMMA, i, t).unwrap())
            .sum();
        assert!(
            (total - particles).abs() < 1e-10,
            "t={t}: {total} vs {particles}"
        );
    }
}

#[test]
fn batching_matches_a_single_solve() {
    let (mu, flow, x, grid, driver) = setup(70);
    let eta = eta_preset("gauss-bump-1", 1, LEVEL + 1).unwrap();
    let whole = weak_terms(&mu, &flow, &x, eta.as_ref(), GAMMA, 1.0).unwrap();
    let b = SineDrift {
        dim: 1,
        amplitude: 1.0,
    };
    let batched =
        batched_weak_form(&mu, &b, &grid, &driver, 4, &x, eta.as_ref(), GAMMA, 1.0).unwrap();
    assert!((whole.residual() - batched.terms.residual()).abs() < 1e-12);
    assert!((whole.mu_t - batched.terms.mu_t).abs() < 1e-12);
    assert_eq!(batched.drift_evaluations, flow.drift_evaluations());
}

#[test]
fn push_forward_keeps_weights() {
    let (mu, flow, _, _, _) = setup(30);
    let mu_t = push_forward(&mu, &flow, 1.0).unwrap();
    assert_eq!(mu_t.weights(), mu.weights());
    assert!((mu_t.mass() - 1.0).abs() < 1e-14);
    let mu_0 = push_forward(&mu, &flow, 0.0).unwrap();
    assert_eq!(mu_0.points(), mu.points());
}
