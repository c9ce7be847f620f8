//! Controlled lifts of compositions `f(φ)`.
//!
//! Component `k` of the lift holds `D^{k−1}f(φ_t)`, so the remainder
//! `f(φ)^{(k)♯}_st` expands the function `g = D^{k−1}f` to order `m = p − k`.

use std::sync::Arc;

use crate::controlled::ControlledPathGrid;
use crate::error::{ensure, Result};
use crate::quadrature::GaussLegendre;
use crate::rough_path::{PathSamples, RoughPathGrid};

use super::stack::{apply_power, Shifted, SmoothFunctionStack};
use super::FlowEnsemble;

/// Trajectory of particle `i` sampled on the grid of `x`.
pub(crate) fn trajectory_on<'a>(
    flow: &'a FlowEnsemble,
    x: &RoughPathGrid,
    i: usize,
) -> Result<std::borrow::Cow<'a, PathSamples>> {
    ensure!(
        i < flow.particles(),
        InvalidArgument,
        "particle {i} out of range 0..{}",
        flow.particles()
    );
    ensure!(
        x.dim() == flow.dim(),
        Shape,
        "rough path dimension {} differs from flow dimension {}",
        x.dim(),
        flow.dim()
    );
    if x.grid() == flow.fine_grid() {
        Ok(std::borrow::Cow::Borrowed(flow.trajectory_fine(i)))
    } else if x.grid() == flow.grid() {
        Ok(std::borrow::Cow::Owned(flow.trajectory(i)))
    } else {
        Err(crate::Error::Shape(
            "the rough path lives on neither grid of the flow".into(),
        ))
    }
}

pub(crate) fn check_stack(
    f: &dyn SmoothFunctionStack,
    x: &RoughPathGrid,
    orders: usize,
) -> Result<()> {
    let d = x.dim();
    ensure!(
        f.dim() == d,
        Shape,
        "function has input dimension {}, rough path has {d}",
        f.dim()
    );
    ensure!(
        f.value_rank() == 1 || (f.value_rank() == 0 && d == 1),
        Shape,
        "composition lifts need an R^d-valued function (value rank 1), got rank {}",
        f.value_rank()
    );
    ensure!(
        f.max_order() >= orders,
        InvalidArgument,
        "function provides derivatives through order {}, order {orders} is needed",
        f.max_order()
    );
    Ok(())
}

/// The controlled path `(f(φ), Df(φ), …, D^{p−1}f(φ))` of particle `i`,
/// controlled by `x` (a lift on either the driver grid or the fine grid).
pub fn compose_lift(
    f: &dyn SmoothFunctionStack,
    flow: &FlowEnsemble,
    x: &Arc<RoughPathGrid>,
    i: usize,
) -> Result<ControlledPathGrid> {
    let p = x.level();
    check_stack(f, x, p - 1)?;
    let traj = trajectory_on(flow, x, i)?;
    let d = x.dim();
    let n = traj.len();
    let mut components: Vec<Vec<f64>> = (1..=p)
        .map(|k| Vec::with_capacity(n * d.pow(k as u32)))
        .collect();
    let mut buf = Vec::new();
    for j in 0..n {
        let at = traj.point(j);
        for (k, c) in components.iter_mut().enumerate() {
            buf.resize(d.pow(k as u32 + 1), 0.0);
            f.derivative(k, at, &mut buf);
            c.extend_from_slice(&buf);
        }
    }
    ControlledPathGrid::new(x.clone(), components)
}

/// `R^g_m(x, y) = (1/m!) ∫_0^1 D^{m+1}g(y + u(x−y))(1−u)^m du (x−y)^{⊗(m+1)}`.
pub fn taylor_remainder(
    g: &dyn SmoothFunctionStack,
    m: usize,
    x: &[f64],
    y: &[f64],
) -> Result<Vec<f64>> {
    ensure!(
        g.max_order() > m,
        InvalidArgument,
        "remainder of order {m} needs derivative {}",
        m + 1
    );
    ensure!(
        x.len() == g.dim() && y.len() == g.dim(),
        Shape,
        "points must have dimension {}",
        g.dim()
    );
    let rule = GaussLegendre::new(24);
    let h: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let value_len = g.dim().pow(g.value_rank() as u32);
    let mut acc = vec![0.0; value_len];
    let mut point = vec![0.0; g.dim()];
    let fact: f64 = (1..=m).map(|k| k as f64).product();
    for (node, w) in rule.nodes().iter().zip(rule.weights()) {
        let u = 0.5 * (node + 1.0);
        for (p, (b, hv)) in point.iter_mut().zip(y.iter().zip(&h)) {
            *p = b + u * hv;
        }
        let dg = g.derivative_vec(m + 1, &point);
        let weight = 0.5 * w * (1.0 - u).powi(m as i32) / fact;
        for (a, v) in acc.iter_mut().zip(apply_power(&dg, &h, m + 1)) {
            *a += weight * v;
        }
    }
    Ok(acc)
}

/// Both sides of the remainder decomposition for component `k` of the lift
/// of particle `i` between nodes `s ≤ t` of `x`'s grid:
/// the remainder itself, and
/// `R^g_m(φ_t, φ_s) + Σ_{n=1}^{m} D^n g(φ_s)[(φ_st)^{⊗n} − (X^(1)_st)^{⊗n}]/n!`
/// with `g = D^{k−1}f`, `m = p − k`.
pub fn remainder_decomposition(
    f: &dyn SmoothFunctionStack,
    flow: &FlowEnsemble,
    x: &Arc<RoughPathGrid>,
    i: usize,
    k: usize,
    s: usize,
    t: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let p = x.level();
    check_stack(f, x, p)?;
    ensure!(
        (1..=p).contains(&k),
        InvalidArgument,
        "component {k} outside 1..={p}"
    );
    let lift = compose_lift(f, flow, x, i)?;
    let remainder = lift.remainder(k, s, t)?;
    let traj = trajectory_on(flow, x, i)?;
    let g = Shifted {
        inner: f,
        shift: k - 1,
    };
    let m = p - k;
    let (ps, pt) = (traj.point(s), traj.point(t));
    let mut rhs = taylor_remainder(&g, m, pt, ps)?;
    let phi_st: Vec<f64> = pt.iter().zip(ps).map(|(a, b)| a - b).collect();
    let xst = x.increment(s, t)?;
    let x1 = xst.level_data(1);
    let mut fact = 1.0;
    for n in 1..=m {
        fact *= n as f64;
        let dg = g.derivative_vec(n, ps);
        let a = apply_power(&dg, &phi_st, n);
        let b = apply_power(&dg, x1, n);
        for (r, (u, v)) in rhs.iter_mut().zip(a.iter().zip(&b)) {
            *r += (u - v) / fact;
        }
    }
    Ok((remainder, rhs))
}
