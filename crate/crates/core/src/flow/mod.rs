//! Flows of `φ_t(x) = x + ∫_0^t b(r, φ_r(x)) dr + X_t`.
//!
//! The additive driver is removed by writing `φ = y + X`; `y` solves
//! `y' = b(t, y + X_t)` and is integrated by the explicit midpoint rule on a
//! fine grid with `substeps` cells per driver cell, the driver being linear
//! inside each driver cell. Trajectories and midpoint stages are kept on the
//! fine grid so that later quadratures reuse exactly the same stages.

pub mod drift;
pub mod stack;

mod compose;
mod stability;

pub use compose::{compose_lift, remainder_decomposition, taylor_remainder};
pub use drift::Drift;
pub use stability::{
    drift_stability, driver_stability, ito_residual, time_integral, DriftStabilityRow,
    StabilityReport,
};
pub use stack::SmoothFunctionStack;

use crate::error::{ensure, Error, Result};
use crate::par;
use crate::rough_path::{path_holder, PathSamples, RoughPathGrid, TimeGrid};

/// Trajectories of a set of particles under one drift and one driver.
#[derive(Debug, Clone)]
pub struct FlowEnsemble {
    grid: TimeGrid,
    substeps: usize,
    fine: TimeGrid,
    driver: PathSamples,
    initial: Vec<Vec<f64>>,
    phi: Vec<PathSamples>,
    /// Midpoint stage `φ` and drift value per fine cell.
    stage_phi: Vec<PathSamples>,
    stage_drift: Vec<PathSamples>,
    drift_evaluations: u64,
}

/// Solves the flow for every initial point. `driver` holds `X` at the nodes
/// of `grid` and must start at 0.
pub fn solve_flow(
    b: &dyn Drift,
    grid: &TimeGrid,
    driver: &PathSamples,
    x0s: &[Vec<f64>],
    substeps: usize,
) -> Result<FlowEnsemble> {
    let d = driver.dim();
    ensure!(
        b.dim() == d,
        Shape,
        "drift dimension {} differs from driver dimension {d}",
        b.dim()
    );
    ensure!(
        driver.len() == grid.len(),
        Shape,
        "driver has {} nodes, grid has {}",
        driver.len(),
        grid.len()
    );
    ensure!(substeps >= 1, InvalidArgument, "substeps must be positive");
    ensure!(!x0s.is_empty(), InvalidArgument, "no initial points");
    ensure!(
        x0s.iter()
            .all(|x| x.len() == d && x.iter().all(|v| v.is_finite())),
        Shape,
        "initial points must be finite {d}-vectors"
    );
    ensure!(
        driver.point(0).iter().all(|v| *v == 0.0),
        InvalidArgument,
        "the driver must start at 0"
    );
    let fine = grid.refine(substeps)?;
    let fine_driver = driver.refine_linear(substeps);
    let nodes = fine.nodes();
    let cells = fine.intervals();

    let solved = par::try_map(x0s.len(), |i| {
        let mut phi = PathSamples::zeros(d, cells + 1);
        let mut stage_phi = PathSamples::zeros(d, cells);
        let mut stage_drift = PathSamples::zeros(d, cells);
        let mut y = x0s[i].clone();
        let mut z = vec![0.0; d];
        let mut k1 = vec![0.0; d];
        let mut k2 = vec![0.0; d];
        phi.point_mut(0).copy_from_slice(&y);
        for k in 0..cells {
            let (t0, t1) = (nodes[k], nodes[k + 1]);
            let h = t1 - t0;
            let tm = t0 + 0.5 * h;
            let (x0, x1) = (fine_driver.point(k), fine_driver.point(k + 1));
            for j in 0..d {
                z[j] = y[j] + x0[j];
            }
            b.eval(t0, &z, &mut k1);
            for j in 0..d {
                z[j] = y[j] + 0.5 * h * k1[j] + 0.5 * (x0[j] + x1[j]);
            }
            b.eval(tm, &z, &mut k2);
            if !k1.iter().chain(&k2).all(|v| v.is_finite()) {
                return Err(Error::NonFinite(format!(
                    "drift at particle {i}, time {tm}, position {z:?}"
                )));
            }
            stage_phi.point_mut(k).copy_from_slice(&z);
            stage_drift.point_mut(k).copy_from_slice(&k2);
            for j in 0..d {
                y[j] += h * k2[j];
            }
            let p = phi.point_mut(k + 1);
            for j in 0..d {
                p[j] = y[j] + x1[j];
            }
        }
        Ok((phi, stage_phi, stage_drift))
    })?;
    let mut phi = Vec::with_capacity(x0s.len());
    let mut stage_phi = Vec::with_capacity(x0s.len());
    let mut stage_drift = Vec::with_capacity(x0s.len());
    for (a, s, b) in solved {
        phi.push(a);
        stage_phi.push(s);
        stage_drift.push(b);
    }
    Ok(FlowEnsemble {
        grid: grid.clone(),
        substeps,
        fine,
        driver: fine_driver,
        initial: x0s.to_vec(),
        phi,
        stage_phi,
        stage_drift,
        drift_evaluations: 2 * (cells as u64) * x0s.len() as u64,
    })
}

impl FlowEnsemble {
    /// The driver grid.
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// The integration grid (driver grid refined `substeps` times).
    pub fn fine_grid(&self) -> &TimeGrid {
        &self.fine
    }

    pub fn substeps(&self) -> usize {
        self.substeps
    }

    pub fn dim(&self) -> usize {
        self.driver.dim()
    }

    pub fn particles(&self) -> usize {
        self.initial.len()
    }

    pub fn initial_points(&self) -> &[Vec<f64>] {
        &self.initial
    }

    /// Driver values on the fine grid.
    pub fn fine_driver(&self) -> &PathSamples {
        &self.driver
    }

    /// Trajectory of particle `i` on the fine grid.
    pub fn trajectory_fine(&self, i: usize) -> &PathSamples {
        &self.phi[i]
    }

    /// Trajectory of particle `i` on the driver grid.
    pub fn trajectory(&self, i: usize) -> PathSamples {
        self.phi[i].subsample(self.substeps)
    }

    /// `φ_{t_j}(x_i)` at driver-grid node `j`.
    pub fn at_node(&self, i: usize, j: usize) -> &[f64] {
        self.phi[i].point(j * self.substeps)
    }

    pub fn stage_phi(&self, i: usize) -> &PathSamples {
        &self.stage_phi[i]
    }

    pub fn stage_drift(&self, i: usize) -> &PathSamples {
        &self.stage_drift[i]
    }

    pub fn drift_evaluations(&self) -> u64 {
        self.drift_evaluations
    }

    /// Canonical lift of the driver on the fine grid.
    pub fn fine_driver_lift(&self, level: usize) -> Result<RoughPathGrid> {
        RoughPathGrid::lift_piecewise_linear(&self.fine, &self.driver, level)
    }

    /// Driver values on the driver grid.
    pub fn driver(&self) -> PathSamples {
        self.driver.subsample(self.substeps)
    }

    /// Fine-grid node index of driver-grid time `t`.
    pub fn fine_index(&self, t: f64) -> Result<usize> {
        Ok(self.grid.index_of(t)? * self.substeps)
    }

    /// `R^φ_st = φ_st − X_st` between fine nodes.
    pub fn drift_residual(&self, i: usize, s: usize, t: usize) -> Vec<f64> {
        let (p, x) = (&self.phi[i], &self.driver);
        (0..self.dim())
            .map(|j| (p.point(t)[j] - p.point(s)[j]) - (x.point(t)[j] - x.point(s)[j]))
            .collect()
    }

    /// Discrete `γ`-Hölder seminorm of `φ(x_i) − φ̃(x_i)` on the driver grid.
    pub fn holder_distance(&self, other: &Self, i: usize, gamma: f64) -> Result<f64> {
        ensure!(
            self.grid == other.grid && self.substeps == other.substeps,
            Shape,
            "flows live on different grids"
        );
        let diff = self.trajectory(i).add_scaled(-1.0, &other.trajectory(i))?;
        path_holder(&self.grid, &diff, gamma)
    }

    /// `sup_t |φ_t(x_i) − φ̃_t(x_i)|` over the fine grid.
    pub fn sup_distance(&self, other: &Self, i: usize) -> Result<f64> {
        ensure!(
            self.fine == other.fine,
            Shape,
            "flows live on different grids"
        );
        let (a, b) = (&self.phi[i], &other.phi[i]);
        Ok((0..a.len())
            .map(|k| {
                a.point(k)
                    .iter()
                    .zip(b.point(k))
                    .map(|(u, v)| (u - v) * (u - v))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, par::nan_max))
    }

    /// CSV rows `t,particle,φ_1,…,φ_d` on the driver grid.
    pub fn to_csv(&self) -> String {
        let d = self.dim();
        let mut out = String::from("t,particle");
        for j in 1..=d {
            out.push_str(&format!(",phi{j}"));
        }
        out.push_str("\r\n");
        for (jn, &t) in self.grid.nodes().iter().enumerate() {
            for i in 0..self.particles() {
                out.push_str(&crate::harness::fmt_f64(t));
                out.push_str(&format!(",{i}"));
                for v in self.at_node(i, jn) {
                    out.push(',');
                    out.push_str(&crate::harness::fmt_f64(*v));
                }
                out.push_str("\r\n");
            }
        }
        out
    }
}
