//! The sewing map and the rough integral.
//!
//! [`sew`] evaluates Riemann-type sums `Σ_{[u,v]∈P} Ξ_uv` over nested
//! partitions of `[s, t]` and stops once successive sums agree to
//! `atol + rtol·|S|`. The whole sequence of sums is returned so callers can
//! inspect rates.

use serde::Serialize;

use crate::controlled::ControlledPathGrid;
use crate::error::{ensure, Result};
use crate::par;
use crate::rough_path::TimeGrid;

/// A two-parameter function `(s, t) ↦ Ξ_st`.
pub trait Germ: Sync {
    fn eval(&self, s: f64, t: f64) -> Result<f64>;

    /// Declared exponents `(α, β)` with `|Ξ_st| ≲ (t−s)^α`, `|δΞ_sut| ≲ (t−s)^β`.
    fn exponents(&self) -> (f64, f64);
}

/// A germ given by a closure plus declared exponents.
pub struct GermFunction<F> {
    f: F,
    alpha: f64,
    beta: f64,
}

impl<F> GermFunction<F>
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    pub fn new(f: F, alpha: f64, beta: f64) -> Result<Self> {
        ensure!(
            beta > 1.0,
            InvalidArgument,
            "sewing needs β > 1, declared β = {beta}"
        );
        ensure!(
            alpha > 0.0,
            InvalidArgument,
            "declared α must be positive, got {alpha}"
        );
        Ok(Self { f, alpha, beta })
    }
}

impl<F> Germ for GermFunction<F>
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    fn eval(&self, s: f64, t: f64) -> Result<f64> {
        Ok((self.f)(s, t))
    }

    fn exponents(&self) -> (f64, f64) {
        (self.alpha, self.beta)
    }
}

/// `Ξ_st = Σ_n Y^(n)_s X^(n)_st` for a controlled path; defined on grid nodes.
pub struct ControlledGerm<'a> {
    y: &'a ControlledPathGrid,
    gamma: f64,
}

impl<'a> ControlledGerm<'a> {
    pub fn new(y: &'a ControlledPathGrid, gamma: f64) -> Result<Self> {
        let p = y.level();
        ensure!(
            gamma > 0.0 && gamma < 1.0,
            InvalidArgument,
            "γ must lie in (0, 1), got {gamma}"
        );
        ensure!(
            (p + 1) as f64 * gamma > 1.0,
            InvalidArgument,
            "the rough integral needs (p+1)γ > 1, got p = {p}, γ = {gamma}"
        );
        Ok(Self { y, gamma })
    }

    /// `Ξ` between node indices.
    pub fn eval_nodes(&self, i: usize, j: usize) -> Result<f64> {
        Ok(self.y.germ_with(i, &self.y.base().increment(i, j)?))
    }
}

impl Germ for ControlledGerm<'_> {
    fn eval(&self, s: f64, t: f64) -> Result<f64> {
        let g = self.y.grid();
        self.eval_nodes(g.index_of(s)?, g.index_of(t)?)
    }

    fn exponents(&self) -> (f64, f64) {
        (self.gamma, (self.y.level() + 1) as f64 * self.gamma)
    }
}

/// `δΞ_sut = Ξ_st − Ξ_su − Ξ_ut`.
pub fn delta<G: Germ + ?Sized>(xi: &G, s: f64, u: f64, t: f64) -> Result<f64> {
    ensure!(
        s <= u && u <= t,
        InvalidArgument,
        "δΞ needs s <= u <= t, got ({s}, {u}, {t})"
    );
    Ok(xi.eval(s, t)? - xi.eval(s, u)? - xi.eval(u, t)?)
}

/// How `[s, t]` is refined from one level to the next.
#[derive(Debug, Clone)]
pub enum PartitionScheme {
    /// `base^L` equal pieces at level `L`.
    Uniform { base: usize },
    /// Grid nodes only: `base^L` pieces of equal node count while that
    /// divides the node span, then every grid cell as the final level.
    Grid { grid: TimeGrid, base: usize },
}

#[derive(Debug, Clone, Copy)]
pub struct SewOptions {
    pub atol: f64,
    pub rtol: f64,
    pub max_levels: usize,
    /// Upper bound on the number of germ evaluations in one level.
    pub max_pieces: usize,
    /// Uniform partitions report divergence only from this level on, once
    /// three successive increments have not decreased.
    pub divergence_level: usize,
}

impl Default for SewOptions {
    fn default() -> Self {
        Self {
            atol: 1e-12,
            rtol: 1e-10,
            max_levels: 20,
            max_pieces: 1 << 22,
            divergence_level: 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SewStatus {
    /// Successive sums met the tolerance.
    Converged,
    /// The grid cannot be refined further; the value is the full-grid sum.
    GridResolution,
    /// Level or evaluation budget exhausted before the tolerance was met.
    MaxLevels,
    /// The last three increments did not decrease.
    Diverging,
}

#[derive(Debug, Clone, Serialize)]
pub struct SewResult {
    pub value: f64,
    /// `|S_L − S_{L−1}|` at the returned level.
    pub last_increment: f64,
    /// Partition sums `S_0 = Ξ_st, S_1, …`.
    pub sums: Vec<f64>,
    pub status: SewStatus,
}

impl SewResult {
    /// The value, or a non-convergence error for diverging refinements.
    pub fn into_value(self) -> Result<f64> {
        ensure!(
            self.status != SewStatus::Diverging,
            NonConvergence,
            "partition sums diverge: increments {:?}",
            self.sums
                .windows(2)
                .map(|w| (w[1] - w[0]).abs())
                .collect::<Vec<_>>()
        );
        Ok(self.value)
    }
}

fn partition_sum<G: Germ + ?Sized>(xi: &G, points: &[f64]) -> Result<f64> {
    let terms = par::try_map(points.len() - 1, |i| xi.eval(points[i], points[i + 1]))?;
    Ok(par::compensated_sum(&terms))
}

/// Approximates `ℐΞ_st` by nested partition sums.
pub fn sew<G: Germ + ?Sized>(
    xi: &G,
    s: f64,
    t: f64,
    scheme: &PartitionScheme,
    opts: &SewOptions,
) -> Result<SewResult> {
    let (_, beta) = xi.exponents();
    ensure!(
        beta > 1.0,
        InvalidArgument,
        "sewing needs β > 1, declared β = {beta}"
    );
    ensure!(s <= t, InvalidArgument, "sew needs s <= t, got {s} > {t}");
    let first = xi.eval(s, t)?;
    let mut sums = vec![first];
    if s == t {
        return Ok(SewResult {
            value: first,
            last_increment: 0.0,
            sums,
            status: SewStatus::Converged,
        });
    }
    let (base, grid_span) = match scheme {
        PartitionScheme::Uniform { base } => (*base, None),
        PartitionScheme::Grid { grid, base } => {
            (*base, Some((grid, grid.index_of(s)?, grid.index_of(t)?)))
        }
    };
    ensure!(
        base >= 2,
        InvalidArgument,
        "partition base must be at least 2, got {base}"
    );
    let mut deltas: Vec<f64> = Vec::new();
    let mut pieces = 1usize;
    for level in 1..=opts.max_levels {
        let (points, finest) = match grid_span {
            None => {
                pieces *= base;
                if pieces > opts.max_pieces {
                    break;
                }
                let h = (t - s) / pieces as f64;
                let mut pts: Vec<f64> = (0..pieces).map(|m| s + m as f64 * h).collect();
                pts.push(t);
                (pts, false)
            }
            Some((grid, i, j)) => {
                let span = j - i;
                if span % (pieces * base) == 0 {
                    pieces *= base;
                } else {
                    pieces = span;
                }
                if pieces > opts.max_pieces {
                    break;
                }
                let step = span / pieces;
                (
                    (0..=pieces).map(|m| grid.node(i + m * step)).collect(),
                    pieces == span,
                )
            }
        };
        let sum = partition_sum(xi, &points)?;
        let inc = (sum - sums[sums.len() - 1]).abs();
        sums.push(sum);
        deltas.push(inc);
        if !sum.is_finite() {
            return Err(crate::Error::NonFinite(format!(
                "partition sum at {pieces} pieces is {sum}"
            )));
        }
        if inc < opts.atol + opts.rtol * sum.abs() {
            return Ok(SewResult {
                value: sum,
                last_increment: inc,
                sums,
                status: SewStatus::Converged,
            });
        }
        if finest {
            return Ok(SewResult {
                value: sum,
                last_increment: inc,
                sums,
                status: SewStatus::GridResolution,
            });
        }
        if grid_span.is_none() && level >= opts.divergence_level && deltas.len() >= 3 {
            let w = &deltas[deltas.len() - 3..];
            if w[1] >= w[0] && w[2] >= w[1] {
                return Ok(SewResult {
                    value: sum,
                    last_increment: inc,
                    sums,
                    status: SewStatus::Diverging,
                });
            }
        }
    }
    let value = sums[sums.len() - 1];
    let last_increment = deltas.last().copied().unwrap_or(0.0);
    Ok(SewResult {
        value,
        last_increment,
        sums,
        status: SewStatus::MaxLevels,
    })
}

/// `∫_s^t Y dX` for grid times `s ≤ t`, sewn along dyadic grid refinements.
pub fn rough_integral(y: &ControlledPathGrid, gamma: f64, s: f64, t: f64) -> Result<SewResult> {
    let germ = ControlledGerm::new(y, gamma)?;
    let scheme = PartitionScheme::Grid {
        grid: y.grid().clone(),
        base: 2,
    };
    sew(&germ, s, t, &scheme, &SewOptions::default())
}

/// Running rough integral `t_j ↦ ∫_0^{t_j} Y dX` at full grid resolution.
pub fn cumulative_rough_integral(y: &ControlledPathGrid, gamma: f64) -> Result<Vec<f64>> {
    let germ = ControlledGerm::new(y, gamma)?;
    let n = y.grid().intervals();
    let terms = par::try_map(n, |i| germ.eval_nodes(i, i + 1))?;
    let mut out = Vec::with_capacity(n + 1);
    let (mut sum, mut comp) = (0.0_f64, 0.0_f64);
    out.push(0.0);
    for v in terms {
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

/// `‖Ξ − Ξ̃‖_α + ‖δ(Ξ − Ξ̃)‖_β` over the node pairs and triples of `grid`.
pub fn germ_distance<G, H>(
    xi: &G,
    xi_tilde: &H,
    grid: &TimeGrid,
    alpha: f64,
    beta: f64,
) -> Result<f64>
where
    G: Germ + ?Sized,
    H: Germ + ?Sized,
{
    ensure!(
        alpha > 0.0 && beta > 0.0,
        InvalidArgument,
        "exponents must be positive"
    );
    let nodes = grid.nodes();
    let n = nodes.len();
    // diff[i][j - i] = (Ξ − Ξ̃)(t_i, t_j).
    let diff: Vec<Vec<f64>> = par::try_map(n, |i| {
        (i..n)
            .map(|j| Ok(xi.eval(nodes[i], nodes[j])? - xi_tilde.eval(nodes[i], nodes[j])?))
            .collect()
    })?;
    let first = par::max(n, |i| {
        (i + 1..n)
            .map(|j| diff[i][j - i].abs() / (nodes[j] - nodes[i]).powf(alpha))
            .fold(0.0, par::nan_max)
    });
    let second = par::max(n, |s| {
        let mut best = 0.0_f64;
        for t in s + 2..n {
            let scale = (nodes[t] - nodes[s]).powf(beta);
            for u in s + 1..t {
                let d = diff[s][t - s] - diff[s][u - s] - diff[u][t - u];
                best = par::nan_max(best, d.abs() / scale);
            }
        }
        best
    });
    Ok(first + second)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rough_path::{PathSamples, RoughPathGrid};
    use std::sync::Arc;

    fn uniform() -> PartitionScheme {
        PartitionScheme::Uniform { base: 2 }
    }

    #[test]
    fn delta_examples() {
        let add = GermFunction::new(|s: f64, t: f64| t.sin() - s.sin(), 1.0, 2.0).unwrap();
        assert!(delta(&add, 0.1, 0.4, 0.9).unwrap().abs() < 1e-16);
        let sq = GermFunction::new(|s: f64, t: f64| (t - s).powi(2), 2.0, 2.0).unwrap();
        let (s, u, t) = (0.1, 0.35, 0.9);
        assert!((delta(&sq, s, u, t).unwrap() - 2.0 * (u - s) * (t - u)).abs() < 1e-15);
        assert!(delta(&sq, 0.5, 0.1, 0.9).is_err());
    }

    #[test]
    fn beta_at_most_one_is_rejected() {
        assert!(GermFunction::new(|s: f64, t: f64| t - s, 1.0, 1.0).is_err());
        struct Bad;
        impl Germ for Bad {
            fn eval(&self, _: f64, _: f64) -> Result<f64> {
                Ok(0.0)
            }
            fn exponents(&self) -> (f64, f64) {
                (0.5, 0.9)
            }
        }
        assert!(sew(&Bad, 0.0, 1.0, &uniform(), &SewOptions::default()).is_err());
    }

    #[test]
    fn additive_germs_sew_to_themselves() {
        let add = GermFunction::new(|s: f64, t: f64| t.exp() - s.exp(), 1.0, 2.0).unwrap();
        let r = sew(&add, 0.0, 1.0, &uniform(), &SewOptions::default()).unwrap();
        assert_eq!(r.status, SewStatus::Converged);
        assert!((r.value - (1f64.exp() - 1.0)).abs() < 1e-14);
        for v in &r.sums {
            assert!((v - r.value).abs() < 1e-14);
        }
    }

    #[test]
    fn second_order_germ_telescopes() {
        // s(t−s) + (t−s)²/2 = (t² − s²)/2.
        let g = GermFunction::new(
            |s: f64, t: f64| s * (t - s) + 0.5 * (t - s) * (t - s),
            1.0,
            3.0,
        )
        .unwrap();
        let r = sew(&g, 0.0, 1.0, &uniform(), &SewOptions::default()).unwrap();
        assert!((r.value - 0.5).abs() < 1e-15);
        assert!(r.sums.iter().all(|v| (v - 0.5).abs() < 1e-15));
    }

    #[test]
    fn smooth_second_order_germs_vanish() {
        let g = GermFunction::new(|s: f64, t: f64| (t - s).powi(2), 2.0, 2.0).unwrap();
        let r = sew(&g, 0.0, 1.0, &uniform(), &SewOptions::default()).unwrap();
        assert_eq!(r.status, SewStatus::MaxLevels);
        assert!(r.value.abs() <= 2f64.powi(-20) * (1.0 + 1e-12));
        for w in r.sums.windows(2) {
            assert!((w[1] - 0.5 * w[0]).abs() < 1e-15);
        }
        let cubic =
            GermFunction::new(|s: f64, t: f64| (1.0 + s) * (t - s).powi(3), 3.0, 3.0).unwrap();
        let r = sew(&cubic, 0.0, 1.0, &uniform(), &SewOptions::default()).unwrap();
        assert!(r.value.abs() < 1e-10, "{r:?}");
    }

    #[test]
    fn sewing_is_additive() {
        let g = GermFunction::new(
            |s: f64, t: f64| s.cos() * (t - s) - 0.5 * s.sin() * (t - s).powi(2),
            1.0,
            3.0,
        )
        .unwrap();
        let opts = SewOptions::default();
        let whole = sew(&g, 0.0, 1.0, &uniform(), &opts).unwrap().value;
        let left = sew(&g, 0.0, 0.3, &uniform(), &opts).unwrap().value;
        let right = sew(&g, 0.3, 1.0, &uniform(), &opts).unwrap().value;
        assert!((whole - left - right).abs() < 1e-10);
        assert!((whole - 1f64.sin()).abs() < 1e-10);
    }

    #[test]
    fn sewing_bound_has_declared_exponent() {
        // Ξ_st = cos(s)(t−s) has δΞ of order (t−s)², so |ℐΞ − Ξ| ~ (t−s)².
        let g = GermFunction::new(|s: f64, t: f64| s.cos() * (t - s), 1.0, 2.0).unwrap();
        let opts = SewOptions::default();
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for m in 1..=8 {
            let h = 0.5f64.powi(m);
            let v = sew(&g, 0.2, 0.2 + h, &uniform(), &opts).unwrap().value;
            xs.push(h.ln());
            ys.push((v - g.eval(0.2, 0.2 + h).unwrap()).abs().ln());
        }
        let slope = crate::stats::regression_slope(&xs, &ys);
        assert!((slope - 2.0).abs() < 0.15, "{slope}");
    }

    #[test]
    fn diverging_refinements_are_flagged() {
        // Ξ_st = (t−s)^{1/2} sums grow like 2^{L/2}; declared β is a lie.
        let g = GermFunction::new(|s: f64, t: f64| (t - s).sqrt(), 0.5, 1.5).unwrap();
        let r = sew(&g, 0.0, 1.0, &uniform(), &SewOptions::default()).unwrap();
        assert_eq!(r.status, SewStatus::Diverging);
        assert!(matches!(
            r.into_value(),
            Err(crate::Error::NonConvergence(_))
        ));
    }

    fn identity_lift(k: u32, p: usize) -> Arc<RoughPathGrid> {
        let g = TimeGrid::dyadic(1.0, k).unwrap();
        Arc::new(
            RoughPathGrid::lift_piecewise_linear(
                &g,
                &PathSamples::from_fn(&g, 1, |t| vec![t]).unwrap(),
                p,
            )
            .unwrap(),
        )
    }

    #[test]
    fn rough_integral_of_t_against_t() {
        let x = identity_lift(6, 2);
        let nodes = x.grid().nodes().to_vec();
        let y = ControlledPathGrid::from_node_fn(x, |i| vec![vec![nodes[i]], vec![1.0]]).unwrap();
        let r = rough_integral(&y, 0.4, 0.0, 1.0).unwrap();
        assert!((r.value - 0.5).abs() < 1e-15);
        assert_eq!(r.status, SewStatus::Converged);
        let cum = cumulative_rough_integral(&y, 0.4).unwrap();
        for (i, v) in cum.iter().enumerate() {
            assert!((v - 0.5 * nodes[i] * nodes[i]).abs() < 1e-15);
        }
        let zero = ControlledPathGrid::zero(y.base().clone());
        assert_eq!(rough_integral(&zero, 0.4, 0.0, 1.0).unwrap().value, 0.0);
        assert!(rough_integral(&y, 0.3, 0.0, 1.0).is_err());
    }

    #[test]
    fn rough_integral_of_x_dx_for_quadratic_path() {
        let g = TimeGrid::dyadic(1.0, 12).unwrap();
        let samples = PathSamples::from_fn(&g, 1, |t| vec![t * t]).unwrap();
        let x = Arc::new(RoughPathGrid::lift_piecewise_linear(&g, &samples, 2).unwrap());
        let y = ControlledPathGrid::from_node_fn(x, |i| vec![samples.point(i).to_vec(), vec![1.0]])
            .unwrap();
        let r = rough_integral(&y, 0.45, 0.0, 1.0).unwrap();
        assert!((r.value - 0.5).abs() < 1e-6, "{r:?}");
    }

    #[test]
    fn grid_scheme_rejects_off_grid_endpoints() {
        let x = identity_lift(3, 2);
        let y = ControlledPathGrid::zero(x);
        assert!(rough_integral(&y, 0.4, 0.0, 0.3).is_err());
    }

    #[test]
    fn germ_distance_examples() {
        let g = TimeGrid::dyadic(1.0, 4).unwrap();
        let a = GermFunction::new(
            |s: f64, t: f64| s * (t - s) + 0.5 * (t - s).powi(2),
            1.0,
            2.0,
        )
        .unwrap();
        assert_eq!(germ_distance(&a, &a, &g, 0.4, 1.2).unwrap(), 0.0);
        let zero = GermFunction::new(|_: f64, _: f64| 0.0, 1.0, 2.0).unwrap();
        let c = GermFunction::new(
            |s: f64, t: f64| -3.0 * (s * (t - s) + 0.5 * (t - s).powi(2)),
            1.0,
            2.0,
        )
        .unwrap();
        let d1 = germ_distance(&a, &zero, &g, 0.4, 1.2).unwrap();
        let d3 = germ_distance(&c, &zero, &g, 0.4, 1.2).unwrap();
        assert!((d3 - 3.0 * d1).abs() < 1e-12);
        // Lifts of t and (1+ε)t with Y = X controlled data: distance is linear in ε.
        let germ = |eps: f64| {
            move |s: f64, t: f64| {
                let (xs, dx) = ((1.0 + eps) * s, (1.0 + eps) * (t - s));
                xs * dx + 0.5 * dx * dx
            }
        };
        let base = GermFunction::new(germ(0.0), 1.0, 2.0).unwrap();
        let r: Vec<f64> = [1e-2, 1e-3, 1e-4]
            .iter()
            .map(|&e| {
                germ_distance(
                    &GermFunction::new(germ(e), 1.0, 2.0).unwrap(),
                    &base,
                    &g,
                    0.4,
                    1.2,
                )
                .unwrap()
                    / e
            })
            .collect();
        assert!(
            (r[0] / r[2] - 1.0).abs() < 0.05 && (r[1] / r[2] - 1.0).abs() < 0.01,
            "{r:?}"
        );
    }
}
