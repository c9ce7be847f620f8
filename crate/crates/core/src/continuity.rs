//! Measure solutions of the rough continuity equation as push-forwards of a
//! particle measure along the flow.

use std::f64::consts::SQRT_2;
use std::sync::Arc;

use serde::Serialize;
use statrs::function::erf::erf_inv;

use crate::controlled::ControlledPathGrid;
use crate::error::{ensure, Error, Result};
use crate::fbm::{check_hurst_constraint, level_for_gamma, FbmSampler, FbmSpec};
use crate::flow::drift::mollified_drift;
use crate::flow::stack::{eta_preset, Shifted};
use crate::flow::{
    compose_lift, solve_flow, time_integral, Drift, FlowEnsemble, SmoothFunctionStack,
};
use crate::par;
use crate::rough_path::{path_holder, PathSamples, RoughPathGrid, TimeGrid};
use crate::sewing::cumulative_rough_integral;

/// Default number of particles for densities.
pub const DEFAULT_PARTICLES: usize = 512;

/// Particles processed together when a computation is batched.
const CHUNK: usize = 32;

/// A finite signed measure `Σ w_i δ_{x_i}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParticleMeasure {
    dim: usize,
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl ParticleMeasure {
    pub fn new(points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        ensure!(
            !points.is_empty(),
            InvalidArgument,
            "a particle measure needs at least one point"
        );
        ensure!(
            points.len() == weights.len(),
            Shape,
            "{} points but {} weights",
            points.len(),
            weights.len()
        );
        let dim = points[0].len();
        ensure!(dim >= 1, Shape, "points must have positive dimension");
        ensure!(
            points.iter().all(|p| p.len() == dim),
            Shape,
            "points must all have dimension {dim}"
        );
        ensure!(
            points
                .iter()
                .flatten()
                .chain(&weights)
                .all(|v| v.is_finite()),
            NonFinite,
            "particle positions and weights must be finite"
        );
        Ok(Self {
            dim,
            points,
            weights,
        })
    }

    pub fn dirac(x: Vec<f64>) -> Result<Self> {
        Self::new(vec![x], vec![1.0])
    }

    /// Equal weights `1/M` on the given points.
    pub fn uniform(points: Vec<Vec<f64>>) -> Result<Self> {
        let w = 1.0 / points.len().max(1) as f64;
        let n = points.len();
        Self::new(points, vec![w; n])
    }

    /// Product of per-axis quantile placements `q((i + ½)/m)`, equal weights.
    /// `particles` is rounded to the nearest `d`-th power `m^d`.
    pub fn stratified<Q: Fn(f64) -> f64>(
        dim: usize,
        particles: usize,
        quantile: Q,
    ) -> Result<Self> {
        ensure!(dim >= 1, InvalidArgument, "dimension must be positive");
        ensure!(
            particles >= 1,
            InvalidArgument,
            "particle count must be positive"
        );
        let m = ((particles as f64).powf(1.0 / dim as f64).round() as usize).max(1);
        let axis: Vec<f64> = (0..m)
            .map(|i| quantile((i as f64 + 0.5) / m as f64))
            .collect();
        let total = m.pow(dim as u32);
        let points = (0..total)
            .map(|mut flat| {
                let mut p = vec![0.0; dim];
                for slot in p.iter_mut().rev() {
                    *slot = axis[flat % m];
                    flat /= m;
                }
                p
            })
            .collect();
        Self::uniform(points)
    }

    /// Centred Gaussian with standard deviation `std` in each coordinate.
    pub fn gaussian(dim: usize, std: f64, particles: usize) -> Result<Self> {
        ensure!(
            std > 0.0,
            InvalidArgument,
            "standard deviation must be positive, got {std}"
        );
        Self::stratified(dim, particles, |q| std * SQRT_2 * erf_inv(2.0 * q - 1.0))
    }

    /// Uniform law on `[−half_width, half_width]^d`.
    pub fn uniform_box(dim: usize, half_width: f64, particles: usize) -> Result<Self> {
        ensure!(
            half_width > 0.0,
            InvalidArgument,
            "box half-width must be positive, got {half_width}"
        );
        Self::stratified(dim, particles, |q| half_width * (2.0 * q - 1.0))
    }

    /// Named initial measures: `gaussian`, `uniform`, `dirac`.
    pub fn preset(name: &str, dim: usize, particles: usize) -> Result<Self> {
        match name {
            "gaussian" => Self::gaussian(dim, 0.5, particles),
            "uniform" => Self::uniform_box(dim, 1.0, particles),
            "dirac" => Self::dirac(vec![0.0; dim]),
            other => Err(Error::Config(format!(
                "unknown measure '{other}' (expected gaussian, uniform or dirac)"
            ))),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `Σ w_i`.
    pub fn mass(&self) -> f64 {
        par::compensated_sum(&self.weights)
    }

    /// `Σ |w_i|`.
    pub fn total_variation(&self) -> f64 {
        let abs: Vec<f64> = self.weights.iter().map(|w| w.abs()).collect();
        par::compensated_sum(&abs)
    }

    /// `μ(η) = Σ w_i η(x_i)`.
    pub fn pair<F: Fn(&[f64]) -> f64>(&self, eta: F) -> f64 {
        let terms: Vec<f64> = self
            .points
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * eta(x))
            .collect();
        par::compensated_sum(&terms)
    }

    /// `μ(η)` for a scalar stack.
    pub fn pair_stack(&self, eta: &dyn SmoothFunctionStack) -> f64 {
        self.pair(|x| eta.value(x)[0])
    }

    /// Particles `range` as their own measure.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Self {
        Self {
            dim: self.dim,
            points: self.points[range.clone()].to_vec(),
            weights: self.weights[range].to_vec(),
        }
    }

    pub fn with_weights(&self, weights: Vec<f64>) -> Result<Self> {
        Self::new(self.points.clone(), weights)
    }
}

fn check_flow(mu: &ParticleMeasure, flow: &FlowEnsemble) -> Result<()> {
    ensure!(
        flow.initial_points() == mu.points(),
        Shape,
        "the flow was not solved from the {} support points of the measure",
        mu.len()
    );
    Ok(())
}

/// `μ_t = (φ_t)♯μ_0` for a node `t` of the flow's (fine) grid.
pub fn push_forward(mu0: &ParticleMeasure, flow: &FlowEnsemble, t: f64) -> Result<ParticleMeasure> {
    check_flow(mu0, flow)?;
    let j = flow.fine_index(t)?;
    let points = (0..mu0.len())
        .map(|i| flow.trajectory_fine(i).point(j).to_vec())
        .collect();
    ParticleMeasure::new(points, mu0.weights.clone())
}

/// `ν(f(φ)) = Σ w_i f(φ(x_i))` as a controlled path, accumulated in
/// particle order.
pub fn integrated_controlled_path(
    nu: &ParticleMeasure,
    f: &dyn SmoothFunctionStack,
    flow: &FlowEnsemble,
    x: &Arc<RoughPathGrid>,
) -> Result<ControlledPathGrid> {
    check_flow(nu, flow)?;
    let mut acc: Option<Vec<Vec<f64>>> = None;
    for start in (0..nu.len()).step_by(CHUNK) {
        let end = (start + CHUNK).min(nu.len());
        let lifts = par::try_map(end - start, |k| compose_lift(f, flow, x, start + k))?;
        for (k, y) in lifts.iter().enumerate() {
            let w = nu.weights[start + k];
            match acc.as_mut() {
                None => {
                    acc = Some(
                        y.components()
                            .iter()
                            .map(|c| c.iter().map(|v| w * v).collect())
                            .collect(),
                    )
                }
                Some(a) => {
                    for (ac, yc) in a.iter_mut().zip(y.components()) {
                        for (s, v) in ac.iter_mut().zip(yc) {
                            *s += w * v;
                        }
                    }
                }
            }
        }
    }
    ControlledPathGrid::new(x.clone(), acc.expect("non-empty measure"))
}

/// The four terms of the weak formulation at one time.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct WeakTerms {
    pub mu_t: f64,
    pub mu_0: f64,
    /// `∫_0^t μ_r(⟨b, Dη⟩) dr`.
    pub time_term: f64,
    /// `∫_0^t μ_r(Dη) dX_r`.
    pub rough_term: f64,
}

impl WeakTerms {
    /// `μ_t(η) − μ_0(η) − ∫ μ_r(b·Dη) dr − ∫ μ_r(Dη) dX_r`.
    pub fn residual(&self) -> f64 {
        self.mu_t - self.mu_0 - self.time_term - self.rough_term
    }

    fn add(&mut self, other: &Self) {
        self.mu_t += other.mu_t;
        self.mu_0 += other.mu_0;
        self.time_term += other.time_term;
        self.rough_term += other.rough_term;
    }
}

/// Weak-form terms of `μ_t = (φ_t)♯μ_0` against `η`, with `x` the driver
/// lift on the flow's fine grid and `t` a node of that grid.
pub fn weak_terms(
    mu0: &ParticleMeasure,
    flow: &FlowEnsemble,
    x: &Arc<RoughPathGrid>,
    eta: &dyn SmoothFunctionStack,
    gamma: f64,
    t: f64,
) -> Result<WeakTerms> {
    check_flow(mu0, flow)?;
    ensure!(
        eta.value_rank() == 0,
        Shape,
        "the test function must be scalar"
    );
    let j = flow.fine_index(t)?;
    let grad = Shifted {
        inner: eta,
        shift: 1,
    };
    let nu = integrated_controlled_path(mu0, &grad, flow, x)?;
    let rough_term = cumulative_rough_integral(&nu, gamma)?[j];
    let times = par::try_map(mu0.len(), |i| Ok(time_integral(eta, flow, i)?[j]))?;
    let weighted: Vec<f64> = times.iter().zip(&mu0.weights).map(|(v, w)| v * w).collect();
    let mu_t = push_forward(mu0, flow, t)?.pair_stack(eta);
    Ok(WeakTerms {
        mu_t,
        mu_0: mu0.pair_stack(eta),
        time_term: par::compensated_sum(&weighted),
        rough_term,
    })
}

/// `|μ_t(η) − μ_0(η) − ∫ μ_r(b·Dη) dr − ∫ μ_r(Dη) dX_r|`.
pub fn weak_residual(
    mu0: &ParticleMeasure,
    flow: &FlowEnsemble,
    x: &Arc<RoughPathGrid>,
    eta: &dyn SmoothFunctionStack,
    gamma: f64,
    t: f64,
) -> Result<f64> {
    Ok(weak_terms(mu0, flow, x, eta, gamma, t)?.residual().abs())
}

/// Solves, evaluates and discards the flow chunk by chunk, so memory does
/// not grow with the particle count.
#[derive(Debug, Clone)]
pub struct BatchedWeakForm {
    pub terms: WeakTerms,
    /// `t ↦ μ_0(Dη(φ_t))` at the driver grid nodes.
    pub gradient_path: PathSamples,
    pub drift_evaluations: u64,
}

#[allow(clippy::too_many_arguments)]
pub fn batched_weak_form(
    mu0: &ParticleMeasure,
    b: &dyn Drift,
    grid: &TimeGrid,
    driver: &PathSamples,
    substeps: usize,
    x: &Arc<RoughPathGrid>,
    eta: &dyn SmoothFunctionStack,
    gamma: f64,
    t: f64,
) -> Result<BatchedWeakForm> {
    let d = mu0.dim();
    let mut terms = WeakTerms::default();
    let mut gradient_path = PathSamples::zeros(d, grid.len());
    let mut drift_evaluations = 0;
    for start in (0..mu0.len()).step_by(CHUNK) {
        let batch = mu0.slice(start..(start + CHUNK).min(mu0.len()));
        let flow = solve_flow(b, grid, driver, batch.points(), substeps)?;
        terms.add(&weak_terms(&batch, &flow, x, eta, gamma, t)?);
        drift_evaluations += flow.drift_evaluations();
        for (i, w) in batch.weights().iter().enumerate() {
            let traj = flow.trajectory(i);
            for n in 0..grid.len() {
                let g = eta.derivative_vec(1, traj.point(n));
                for (s, v) in gradient_path.point_mut(n).iter_mut().zip(&g) {
                    *s += w * v;
                }
            }
        }
    }
    Ok(BatchedWeakForm {
        terms,
        gradient_path,
        drift_evaluations,
    })
}

/// Inputs of the mollified-drift convergence experiment.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub hurst: f64,
    pub dim: usize,
    pub gamma: f64,
    pub horizon: f64,
    pub grid_k: u32,
    pub substeps: usize,
    pub seed: u64,
    pub eps_ladder: Vec<f64>,
    pub drift: String,
    pub eta: String,
    pub measure: ParticleMeasure,
}

/// Work counts, independent of the machine.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct WorkCounts {
    pub flows: usize,
    pub particles: usize,
    pub fine_nodes: usize,
    pub drift_evaluations: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    #[serde(rename = "H")]
    pub hurst: f64,
    pub d: usize,
    pub seed: u64,
    pub gamma: f64,
    pub level: usize,
    pub eps_ladder: Vec<f64>,
    /// `μ_T^{ε_k}(η)`.
    pub pairings: Vec<f64>,
    pub residuals: Vec<f64>,
    pub cauchy_increments: Vec<f64>,
    pub equicontinuity_seminorms: Vec<f64>,
    pub runtime: WorkCounts,
    pub lift: String,
}

impl ExperimentReport {
    pub fn cauchy_decreasing(&self) -> bool {
        self.cauchy_increments.windows(2).all(|w| w[1] < w[0])
    }

    pub fn equicontinuity_spread(&self) -> f64 {
        let max = self
            .equicontinuity_seminorms
            .iter()
            .cloned()
            .fold(f64::MIN, f64::max);
        let min = self
            .equicontinuity_seminorms
            .iter()
            .cloned()
            .fold(f64::MAX, f64::min);
        max / min
    }
}

/// For one fBm realization, solves the flow for each mollified drift
/// `b_{ε_k}` and reports the weak residuals at `T`, the Cauchy increments
/// of `μ_T^{ε_k}(η)` and the `γ`-Hölder seminorm of `t ↦ μ_0(Dη(φ_t))`.
pub fn discontinuous_drift_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    let (h, d) = (spec.hurst, spec.dim);
    ensure!(
        check_hurst_constraint(h, d),
        InvalidArgument,
        "Hurst constraint violated: H = {h} must be below 1/(2(3d-1)) = {} for d = {d}",
        1.0 / (2.0 * (3.0 * d as f64 - 1.0))
    );
    ensure!(
        spec.gamma > 0.0 && spec.gamma < h,
        InvalidArgument,
        "γ = {} must lie in (0, H) with H = {h}",
        spec.gamma
    );
    ensure!(
        spec.measure.dim() == d,
        Shape,
        "initial measure has dimension {}, expected {d}",
        spec.measure.dim()
    );
    ensure!(
        !spec.eps_ladder.is_empty(),
        InvalidArgument,
        "the ε ladder is empty"
    );
    ensure!(
        spec.eps_ladder.iter().all(|e| *e > 0.0) && spec.eps_ladder.windows(2).all(|w| w[1] < w[0]),
        InvalidArgument,
        "the ε ladder must be positive and strictly decreasing"
    );
    let p = level_for_gamma(spec.gamma);
    let eta = eta_preset(&spec.eta, d, p + 1)?;
    let grid = TimeGrid::dyadic(spec.horizon, spec.grid_k)?;
    let driver = FbmSampler::new(FbmSpec::new(h, d, grid.clone(), spec.seed)?)?.sample();
    let fine = grid.refine(spec.substeps)?;
    let x = Arc::new(RoughPathGrid::lift_piecewise_linear(
        &fine,
        &driver.refine_linear(spec.substeps),
        p,
    )?);

    let mut pairings = Vec::new();
    let mut residuals = Vec::new();
    let mut seminorms = Vec::new();
    let mut drift_evaluations = 0;
    for &eps in &spec.eps_ladder {
        let b = mollified_drift(&spec.drift, d, eps)?;
        let out = batched_weak_form(
            &spec.measure,
            b.as_ref(),
            &grid,
            &driver,
            spec.substeps,
            &x,
            eta.as_ref(),
            spec.gamma,
            spec.horizon,
        )?;
        ensure!(
            out.terms.residual().is_finite(),
            NonFinite,
            "weak residual is not finite at ε = {eps}"
        );
        pairings.push(out.terms.mu_t);
        residuals.push(out.terms.residual().abs());
        seminorms.push(path_holder(&grid, &out.gradient_path, spec.gamma)?);
        drift_evaluations += out.drift_evaluations;
    }
    let cauchy_increments = pairings.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    Ok(ExperimentReport {
        hurst: h,
        d,
        seed: spec.seed,
        gamma: spec.gamma,
        level: p,
        eps_ladder: spec.eps_ladder.clone(),
        pairings,
        residuals,
        cauchy_increments,
        equicontinuity_seminorms: seminorms,
        runtime: WorkCounts {
            flows: spec.eps_ladder.len(),
            particles: spec.measure.len(),
            fine_nodes: fine.len(),
            drift_evaluations,
        },
        lift: "interpolation lift".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::drift::{SineDrift, ZeroDrift};
    use crate::flow::stack::{Polynomial, Separable};

    fn line(g: &TimeGrid, d: usize) -> PathSamples {
        PathSamples::from_fn(g, d, |t| vec![t; d]).unwrap()
    }

    #[test]
    fn measure_construction() {
        let g = ParticleMeasure::gaussian(1, 1.0, 4).unwrap();
        assert!((g.points()[0][0] + 1.150349380376).abs() < 1e-9);
        assert!((g.mass() - 1.0).abs() < 1e-15);
        let b = ParticleMeasure::uniform_box(2, 1.0, 10).unwrap();
        assert_eq!(b.len(), 9);
        assert!((b.points()[1][0] + 2.0 / 3.0).abs() < 1e-15 && b.points()[1][1] == 0.0);
        assert_eq!(
            ParticleMeasure::gaussian(3, 1.0, DEFAULT_PARTICLES)
                .unwrap()
                .len(),
            512
        );
        let s = ParticleMeasure::new(vec![vec![0.0], vec![1.0]], vec![1.0, -3.0]).unwrap();
        assert_eq!(s.total_variation(), 4.0);
        assert_eq!(s.pair(|x| x[0] + 1.0), -5.0);
        assert!(ParticleMeasure::new(vec![vec![0.0]], vec![]).is_err());
        assert!(ParticleMeasure::preset("cauchy", 1, 4).is_err());
    }

    #[test]
    fn push_forward_examples() {
        let g = TimeGrid::dyadic(1.0, 4).unwrap();
        let mu = ParticleMeasure::uniform(vec![vec![-1.0], vec![0.0], vec![1.0]]).unwrap();
        let flow = solve_flow(&ZeroDrift { dim: 1 }, &g, &line(&g, 1), mu.points(), 2).unwrap();
        assert_eq!(push_forward(&mu, &flow, 0.0).unwrap(), mu);
        let mt = push_forward(&mu, &flow, 0.75).unwrap();
        let f = |x: &[f64]| (x[0] * 1.3).sin();
        let mean = (f(&[-0.25]) + f(&[0.75]) + f(&[1.75])) / 3.0;
        assert!((mt.pair(f) - mean).abs() < 1e-15);
        let other = ParticleMeasure::dirac(vec![0.5]).unwrap();
        assert!(push_forward(&other, &flow, 0.5).is_err());
    }

    #[test]
    fn integrated_path_examples() {
        let g = TimeGrid::dyadic(1.0, 5).unwrap();
        let drv = PathSamples::from_fn(&g, 1, |t| vec![(3.0 * t).sin()]).unwrap();
        let f = Shifted {
            inner: &*eta_preset("gauss-bump-2", 1, 6).unwrap(),
            shift: 1,
        };
        let twin = ParticleMeasure::new(vec![vec![0.3], vec![0.3]], vec![1.0, -1.0]).unwrap();
        let flow = solve_flow(
            &SineDrift {
                dim: 1,
                amplitude: 1.0,
            },
            &g,
            &drv,
            twin.points(),
            2,
        )
        .unwrap();
        let x = Arc::new(flow.fine_driver_lift(3).unwrap());
        let zero = integrated_controlled_path(&twin, &f, &flow, &x).unwrap();
        assert!(zero.components().iter().flatten().all(|v| *v == 0.0));
        let single = ParticleMeasure::dirac(vec![0.3]).unwrap();
        let flow1 = solve_flow(
            &SineDrift {
                dim: 1,
                amplitude: 1.0,
            },
            &g,
            &drv,
            single.points(),
            2,
        )
        .unwrap();
        let y = integrated_controlled_path(&single, &f, &flow1, &x).unwrap();
        assert_eq!(
            y.components(),
            compose_lift(&f, &flow1, &x, 0).unwrap().components()
        );
    }

    #[test]
    fn weak_residual_examples() {
        let g = TimeGrid::dyadic(1.0, 4).unwrap();
        let mu = ParticleMeasure::dirac(vec![0.0]).unwrap();
        let flow = solve_flow(&ZeroDrift { dim: 1 }, &g, &line(&g, 1), mu.points(), 2).unwrap();
        let x = Arc::new(flow.fine_driver_lift(2).unwrap());
        let sq = Separable::isotropic(
            1,
            vec![Arc::new(Polynomial {
                coeffs: vec![0.0, 0.0, 1.0],
            })],
            4,
        )
        .unwrap();
        assert_eq!(weak_residual(&mu, &flow, &x, &sq, 0.4, 1.0).unwrap(), 0.0);

        // A test function vanishing near every trajectory.
        let far = eta_preset("gauss-bump-1", 1, 6).unwrap();
        let shifted = ParticleMeasure::dirac(vec![-200.0]).unwrap();
        let flow =
            solve_flow(&ZeroDrift { dim: 1 }, &g, &line(&g, 1), shifted.points(), 2).unwrap();
        assert_eq!(
            weak_residual(&shifted, &flow, &x, far.as_ref(), 0.4, 1.0).unwrap(),
            0.0
        );
    }

    #[test]
    fn batching_matches_direct_evaluation() {
        let g = TimeGrid::dyadic(1.0, 5).unwrap();
        let drv = PathSamples::from_fn(&g, 1, |t| vec![0.5 * (4.0 * t).sin()]).unwrap();
        let mu = ParticleMeasure::gaussian(1, 0.5, 70).unwrap();
        let b = SineDrift {
            dim: 1,
            amplitude: 0.8,
        };
        let flow = solve_flow(&b, &g, &drv, mu.points(), 4).unwrap();
        let x = Arc::new(flow.fine_driver_lift(3).unwrap());
        let eta = eta_preset("gauss-bump-1", 1, 6).unwrap();
        let direct = weak_terms(&mu, &flow, &x, eta.as_ref(), 0.3, 1.0).unwrap();
        let batched = batched_weak_form(&mu, &b, &g, &drv, 4, &x, eta.as_ref(), 0.3, 1.0).unwrap();
        for (a, c) in [
            (direct.mu_t, batched.terms.mu_t),
            (direct.time_term, batched.terms.time_term),
            (direct.rough_term, batched.terms.rough_term),
        ] {
            assert!((a - c).abs() < 1e-13, "{a} vs {c}");
        }
    }

    #[test]
    fn experiment_rejects_constraint_violation() {
        let spec = ExperimentSpec {
            hurst: 0.3,
            dim: 1,
            gamma: 0.25,
            horizon: 1.0,
            grid_k: 4,
            substeps: 2,
            seed: 1,
            eps_ladder: vec![0.5, 0.25],
            drift: "sign-cutoff".into(),
            eta: "gauss-bump-1".into(),
            measure: ParticleMeasure::gaussian(1, 0.5, 8).unwrap(),
        };
        let err = discontinuous_drift_experiment(&spec).unwrap_err();
        assert!(err.to_string().contains("Hurst constraint"), "{err}");
        let ok = ExperimentSpec {
            hurst: 0.2,
            gamma: 0.19,
            ..spec
        };
        let r = discontinuous_drift_experiment(&ok).unwrap();
        assert_eq!(r.level, 5);
        assert_eq!(r.cauchy_increments.len(), 1);
        assert!(r.residuals.iter().all(|v| v.is_finite()));
    }
}
