//! Itô–Stratonovich residuals and stability of the flow in its driver and
//! in its drift.

use std::sync::Arc;

use serde::Serialize;

use crate::controlled::controlled_distance;
use crate::error::{ensure, Result};
use crate::rough_path::{path_holder, rho_gamma, PathSamples, RoughPathGrid, TimeGrid};
use crate::sewing::cumulative_rough_integral;
use crate::tensor;

use super::compose::compose_lift;
use super::stack::{Shifted, SmoothFunctionStack};
use super::{solve_flow, Drift, FlowEnsemble};

/// Running `∫_0^t ⟨Dη(φ_r), b(r, φ_r)⟩ dr` of particle `i` at every fine
/// node, using the midpoint stages of the flow solve.
pub fn time_integral(
    eta: &dyn SmoothFunctionStack,
    flow: &FlowEnsemble,
    i: usize,
) -> Result<Vec<f64>> {
    ensure!(
        eta.value_rank() == 0,
        Shape,
        "time integral needs a scalar test function"
    );
    ensure!(
        eta.dim() == flow.dim(),
        Shape,
        "test function dimension differs from flow dimension"
    );
    let nodes = flow.fine_grid().nodes();
    let (sp, sb) = (flow.stage_phi(i), flow.stage_drift(i));
    let mut out = Vec::with_capacity(nodes.len());
    let (mut sum, mut comp) = (0.0_f64, 0.0_f64);
    out.push(0.0);
    for k in 0..nodes.len() - 1 {
        let v = (nodes[k + 1] - nodes[k])
            * tensor::dot(&eta.derivative_vec(1, sp.point(k)), sb.point(k));
        let next = sum + v;
        comp += if sum.abs() >= v.abs() {
            (sum - next) + v
        } else {
            (v - next) + sum
        };
        sum = next;
        out.push(sum + comp);
    }
    Ok(out)
}

/// `η(φ_t) − η(x) − ∫_0^t ⟨Dη(φ_r), b(r,φ_r)⟩ dr − ∫_0^t Dη(φ_r) dX_r` for
/// particle `i`, with `x` the lift of the driver on the flow's fine grid and
/// `t` a node of the driver grid.
pub fn ito_residual(
    eta: &dyn SmoothFunctionStack,
    flow: &FlowEnsemble,
    x: &Arc<RoughPathGrid>,
    gamma: f64,
    i: usize,
    t: f64,
) -> Result<f64> {
    ensure!(
        x.grid() == flow.fine_grid(),
        Shape,
        "the Itô residual needs the driver lift on the fine grid"
    );
    let j = flow.fine_index(t)?;
    let grad = Shifted {
        inner: eta,
        shift: 1,
    };
    let y = compose_lift(&grad, flow, x, i)?;
    let rough = cumulative_rough_integral(&y, gamma)?;
    let time = time_integral(eta, flow, i)?;
    let traj = flow.trajectory_fine(i);
    let value = eta.value(traj.point(j))[0] - eta.value(traj.point(0))[0];
    Ok(value - time[j] - rough[j])
}

/// Lipschitz ratios of the solution map in the driver.
#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub flow_difference: f64,
    pub driver_difference: f64,
    /// `‖φ − φ̃‖_γ / ‖X − X̃‖_γ`; `None` when the drivers coincide.
    pub flow_ratio: Option<f64>,
    pub lift_difference: f64,
    pub rho: f64,
    /// `‖f(φ); f(φ̃)‖_{X,X̃} / ρ_γ(X, X̃)`; `None` when the lifts coincide.
    pub lift_ratio: Option<f64>,
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    (den > 0.0).then(|| num / den)
}

/// Solves the flow from `x0` for the drivers `X` and `X̃` (values on
/// `grid`), lifts both to level `p = ⌊1/γ⌋` and compares.
#[allow(clippy::too_many_arguments)]
pub fn driver_stability(
    b: &dyn Drift,
    grid: &TimeGrid,
    driver: &PathSamples,
    driver_tilde: &PathSamples,
    f: &dyn SmoothFunctionStack,
    gamma: f64,
    x0: &[f64],
    substeps: usize,
) -> Result<StabilityReport> {
    ensure!(
        gamma > 0.0 && gamma < 1.0,
        InvalidArgument,
        "γ must lie in (0, 1), got {gamma}"
    );
    let p = crate::fbm::level_for_gamma(gamma);
    let flow = solve_flow(b, grid, driver, &[x0.to_vec()], substeps)?;
    let flow_tilde = solve_flow(b, grid, driver_tilde, &[x0.to_vec()], substeps)?;
    let x = Arc::new(RoughPathGrid::lift_piecewise_linear(grid, driver, p)?);
    let xt = Arc::new(RoughPathGrid::lift_piecewise_linear(grid, driver_tilde, p)?);
    let flow_difference = flow.holder_distance(&flow_tilde, 0, gamma)?;
    let driver_difference = path_holder(grid, &driver.add_scaled(-1.0, driver_tilde)?, gamma)?;
    let lift = compose_lift(f, &flow, &x, 0)?;
    let lift_tilde = compose_lift(f, &flow_tilde, &xt, 0)?;
    let lift_difference = controlled_distance(&lift, &lift_tilde, gamma)?;
    let rho = rho_gamma(&x, &xt, gamma)?;
    Ok(StabilityReport {
        flow_difference,
        driver_difference,
        flow_ratio: ratio(flow_difference, driver_difference),
        lift_difference,
        rho,
        lift_ratio: ratio(lift_difference, rho),
    })
}

/// Distances between the flow for `b_n` and the flow for the limit drift.
#[derive(Debug, Clone, Serialize)]
pub struct DriftStabilityRow {
    pub index: usize,
    pub holder_distance: f64,
    pub sup_distance: f64,
    pub controlled_distance: f64,
    pub integral_difference: f64,
}

/// For each drift in `sequence`, compares the flow from `x0` (and the lift
/// of `f` along it) with the flow for `limit`, all driven by `driver`.
#[allow(clippy::too_many_arguments)]
pub fn drift_stability(
    sequence: &[&dyn Drift],
    limit: &dyn Drift,
    grid: &TimeGrid,
    driver: &PathSamples,
    f: &dyn SmoothFunctionStack,
    gamma: f64,
    x0: &[f64],
    substeps: usize,
) -> Result<Vec<DriftStabilityRow>> {
    let p = crate::fbm::level_for_gamma(gamma);
    let x = Arc::new(RoughPathGrid::lift_piecewise_linear(grid, driver, p)?);
    let base = solve_flow(limit, grid, driver, &[x0.to_vec()], substeps)?;
    let base_lift = compose_lift(f, &base, &x, 0)?;
    let base_integral = *cumulative_rough_integral(&base_lift, gamma)?
        .last()
        .expect("non-empty grid");
    sequence
        .iter()
        .enumerate()
        .map(|(index, b)| {
            let flow = solve_flow(*b, grid, driver, &[x0.to_vec()], substeps)?;
            let lift = compose_lift(f, &flow, &x, 0)?;
            let integral = *cumulative_rough_integral(&lift, gamma)?
                .last()
                .expect("non-empty grid");
            Ok(DriftStabilityRow {
                index,
                holder_distance: flow.holder_distance(&base, 0, gamma)?,
                sup_distance: flow.sup_distance(&base, 0)?,
                controlled_distance: controlled_distance(&lift, &base_lift, gamma)?,
                integral_difference: (integral - base_integral).abs(),
            })
        })
        .collect()
}
