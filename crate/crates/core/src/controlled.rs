//! Scalar paths controlled by a rough path on a grid.
//!
//! Component `k` (`1 ≤ k ≤ p`) at node `i` is a dense array of `d^k` entries
//! read as an element of `L((R^d)^{⊗k})`. The remainder is
//! `Y^(k)♯_st = Y^(k)_t − Σ_{n=k}^{p} Y^(n)_s X^(n−k)_st`, where the product
//! contracts the leading `n − k` indices of `Y^(n)_s` against `X^(n−k)_st`.

use std::sync::Arc;

use crate::error::{ensure, Result};
use crate::par;
use crate::rough_path::{RoughPathGrid, TimeGrid};
use crate::tensor::{self, TruncatedTensor};

#[derive(Debug, Clone)]
pub struct ControlledPathGrid {
    base: Arc<RoughPathGrid>,
    /// `components[k - 1]` holds `Y^(k)` node-major, `d^k` entries per node.
    components: Vec<Vec<f64>>,
}

impl ControlledPathGrid {
    pub fn new(base: Arc<RoughPathGrid>, components: Vec<Vec<f64>>) -> Result<Self> {
        let (d, p, nodes) = (base.dim(), base.level(), base.grid().len());
        ensure!(
            components.len() == p,
            Shape,
            "{} components for a level-{p} rough path",
            components.len()
        );
        for (k, c) in components.iter().enumerate() {
            let want = nodes * d.pow(k as u32 + 1);
            ensure!(
                c.len() == want,
                Shape,
                "component {} has {} entries, expected {want}",
                k + 1,
                c.len()
            );
            ensure!(
                c.iter().all(|v| v.is_finite()),
                NonFinite,
                "component {} contains non-finite values",
                k + 1
            );
        }
        Ok(Self { base, components })
    }

    /// Builds the components node by node; `f(i)` returns `[Y^(1)_i, …, Y^(p)_i]`.
    pub fn from_node_fn<F>(base: Arc<RoughPathGrid>, f: F) -> Result<Self>
    where
        F: Fn(usize) -> Vec<Vec<f64>>,
    {
        let p = base.level();
        let mut components = vec![Vec::new(); p];
        for i in 0..base.grid().len() {
            let values = f(i);
            ensure!(
                values.len() == p,
                Shape,
                "node {i}: {} components, expected {p}",
                values.len()
            );
            for (c, v) in components.iter_mut().zip(values) {
                c.extend(v);
            }
        }
        Self::new(base, components)
    }

    /// The zero path controlled by `base`.
    pub fn zero(base: Arc<RoughPathGrid>) -> Self {
        let (d, nodes) = (base.dim(), base.grid().len());
        let components = (1..=base.level())
            .map(|k| vec![0.0; nodes * d.pow(k as u32)])
            .collect();
        Self { base, components }
    }

    pub fn base(&self) -> &Arc<RoughPathGrid> {
        &self.base
    }

    pub fn grid(&self) -> &TimeGrid {
        self.base.grid()
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn level(&self) -> usize {
        self.base.level()
    }

    /// `Y^(k)` at node `i`.
    pub fn component(&self, k: usize, i: usize) -> &[f64] {
        let len = self.dim().pow(k as u32);
        &self.components[k - 1][i * len..(i + 1) * len]
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }

    fn check_k(&self, k: usize) -> Result<()> {
        ensure!(
            (1..=self.level()).contains(&k),
            InvalidArgument,
            "component index {k} outside 1..={}",
            self.level()
        );
        Ok(())
    }

    /// `Y^(k)♯_st` for node indices `s ≤ t`.
    pub fn remainder(&self, k: usize, s: usize, t: usize) -> Result<Vec<f64>> {
        self.check_k(k)?;
        let xst = self.base.increment(s, t)?;
        Ok(self.remainder_with(k, s, t, &xst))
    }

    /// Remainder for a precomputed increment `xst = X_st`.
    pub fn remainder_with(&self, k: usize, s: usize, t: usize, xst: &TruncatedTensor) -> Vec<f64> {
        let mut r = self.component(k, t).to_vec();
        for n in k..=self.level() {
            let term = tensor::contract_leading(self.component(n, s), xst.level_data(n - k));
            for (a, b) in r.iter_mut().zip(term) {
                *a -= b;
            }
        }
        r
    }

    /// `Ξ_st = Σ_n Y^(n)_s X^(n)_st` for a precomputed increment.
    pub fn germ_with(&self, s: usize, xst: &TruncatedTensor) -> f64 {
        (1..=self.level())
            .map(|n| tensor::dot(self.component(n, s), xst.level_data(n)))
            .sum()
    }

    /// Per-component discrete norms `‖Y^(k)♯‖_{(p+1−k)γ}`, `k = 1..=p`.
    pub fn remainder_norms(&self, gamma: f64) -> Result<Vec<f64>> {
        remainder_norms(self, None, gamma)
    }

    /// `‖Y‖_X = Σ_k ‖Y^(k)♯‖_{(p+1−k)γ}`.
    pub fn controlled_seminorm(&self, gamma: f64) -> Result<f64> {
        Ok(self.remainder_norms(gamma)?.iter().sum())
    }

    /// `Σ_n ‖Y^(n)_0‖`.
    pub fn initial_norm(&self) -> f64 {
        (1..=self.level())
            .map(|n| tensor::norm(self.component(n, 0)))
            .sum()
    }

    /// `max_n sup_t ‖Y^(n)_t‖`.
    pub fn sup_norm(&self) -> f64 {
        self.sup_distance_to(None)
    }

    fn sup_distance_to(&self, other: Option<&Self>) -> f64 {
        let mut worst = 0.0_f64;
        for n in 1..=self.level() {
            for i in 0..self.grid().len() {
                let a = self.component(n, i);
                let v = match other {
                    Some(z) => a
                        .iter()
                        .zip(z.component(n, i))
                        .map(|(x, y)| (x - y) * (x - y))
                        .sum::<f64>()
                        .sqrt(),
                    None => tensor::norm(a),
                };
                worst = par::nan_max(worst, v);
            }
        }
        worst
    }

    /// `c · Y`.
    pub fn scale(&self, c: f64) -> Self {
        let components = self
            .components
            .iter()
            .map(|v| v.iter().map(|x| c * x).collect())
            .collect();
        Self {
            base: self.base.clone(),
            components,
        }
    }

    /// `Y + c · Z` for paths controlled by the same rough path.
    pub fn add_scaled(&self, c: f64, other: &Self) -> Result<Self> {
        ensure!(
            Arc::ptr_eq(&self.base, &other.base) || self.base == other.base,
            Shape,
            "linear combinations need a common base rough path"
        );
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + c * y).collect())
            .collect();
        Ok(Self {
            base: self.base.clone(),
            components,
        })
    }

    /// `Σ_j w_j Y_j` with the summation order fixed by the slice order.
    pub fn weighted_sum(terms: &[(f64, &Self)]) -> Result<Self> {
        ensure!(
            !terms.is_empty(),
            InvalidArgument,
            "weighted sum of no paths"
        );
        let mut acc = Self::zero(terms[0].1.base.clone());
        for (w, y) in terms {
            acc = acc.add_scaled(*w, y)?;
        }
        Ok(acc)
    }

    fn check_comparable(&self, other: &Self) -> Result<()> {
        self.base.check_same_shape(&other.base)
    }
}

fn remainder_norms(
    y: &ControlledPathGrid,
    z: Option<&ControlledPathGrid>,
    gamma: f64,
) -> Result<Vec<f64>> {
    ensure!(
        gamma > 0.0,
        InvalidArgument,
        "γ must be positive, got {gamma}"
    );
    if let Some(z) = z {
        y.check_comparable(z)?;
    }
    let p = y.level();
    let nodes = y.grid().nodes();
    let rows: Vec<Vec<f64>> = par::map(nodes.len(), |s| {
        let mut best = vec![0.0_f64; p];
        let mut zs: Vec<TruncatedTensor> = Vec::new();
        if let Some(z) = z {
            z.base
                .for_each_increment_from(s, |_, inc| zs.push(inc.clone()));
        }
        y.base.for_each_increment_from(s, |t, xst| {
            let dt = nodes[t] - nodes[s];
            for k in 1..=p {
                let ry = y.remainder_with(k, s, t, xst);
                let v = match z {
                    Some(z) => {
                        let rz = z.remainder_with(k, s, t, &zs[t - s - 1]);
                        ry.iter()
                            .zip(&rz)
                            .map(|(a, b)| (a - b) * (a - b))
                            .sum::<f64>()
                            .sqrt()
                    }
                    None => tensor::norm(&ry),
                };
                best[k - 1] = par::nan_max(best[k - 1], v / dt.powf((p + 1 - k) as f64 * gamma));
            }
        });
        best
    });
    Ok((0..p)
        .map(|k| rows.iter().map(|r| r[k]).fold(0.0, par::nan_max))
        .collect())
}

/// `‖Y; Z‖_{X,X̃} = Σ_k ‖Y^(k)♯ − Z^(k)♯‖_{(p+1−k)γ}`, each remainder taken
/// against its own base rough path.
pub fn controlled_distance(
    y: &ControlledPathGrid,
    z: &ControlledPathGrid,
    gamma: f64,
) -> Result<f64> {
    Ok(remainder_norms(y, Some(z), gamma)?.iter().sum())
}

/// Per-component parts of [`controlled_distance`].
pub fn controlled_distance_parts(
    y: &ControlledPathGrid,
    z: &ControlledPathGrid,
    gamma: f64,
) -> Result<Vec<f64>> {
    remainder_norms(y, Some(z), gamma)
}

/// `max_n sup_t ‖Y^(n)_t − Z^(n)_t‖`.
pub fn sup_distance(y: &ControlledPathGrid, z: &ControlledPathGrid) -> Result<f64> {
    y.check_comparable(z)?;
    Ok(y.sup_distance_to(Some(z)))
}

/// `Σ_n ‖Y^(n)_0 − Z^(n)_0‖`.
pub fn initial_distance(y: &ControlledPathGrid, z: &ControlledPathGrid) -> Result<f64> {
    y.check_comparable(z)?;
    Ok((1..=y.level())
        .map(|n| {
            let (a, b) = (y.component(n, 0), z.component(n, 0));
            a.iter()
                .zip(b)
                .map(|(x, w)| (x - w) * (x - w))
                .sum::<f64>()
                .sqrt()
        })
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rough_path::{rho_gamma, rho_gamma_from_origin, PathSamples};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn lift(
        grid: &TimeGrid,
        dim: usize,
        p: usize,
        f: impl Fn(f64) -> Vec<f64>,
    ) -> Arc<RoughPathGrid> {
        Arc::new(
            RoughPathGrid::lift_piecewise_linear(
                grid,
                &PathSamples::from_fn(grid, dim, f).unwrap(),
                p,
            )
            .unwrap(),
        )
    }

    fn taylor_example() -> ControlledPathGrid {
        let g = TimeGrid::dyadic(1.0, 4).unwrap();
        let x = lift(&g, 1, 2, |t| vec![t]);
        let nodes = g.nodes().to_vec();
        ControlledPathGrid::from_node_fn(x, |i| {
            vec![vec![nodes[i] * nodes[i]], vec![2.0 * nodes[i]]]
        })
        .unwrap()
    }

    fn random_path(base: Arc<RoughPathGrid>, rng: &mut ChaCha8Rng) -> ControlledPathGrid {
        let d = base.dim();
        let p = base.level();
        let coeffs: Vec<Vec<f64>> = (1..=p)
            .map(|k| {
                (0..2 * d.pow(k as u32))
                    .map(|_| rng.random_range(-1.0..1.0))
                    .collect()
            })
            .collect();
        let nodes = base.grid().nodes().to_vec();
        ControlledPathGrid::from_node_fn(base, |i| {
            coeffs
                .iter()
                .map(|c| {
                    let half = c.len() / 2;
                    (0..half)
                        .map(|j| c[j] + c[half + j] * (3.0 * nodes[i] + j as f64).sin())
                        .collect()
                })
                .collect()
        })
        .unwrap()
    }

    #[test]
    fn taylor_example_remainders() {
        let y = taylor_example();
        let n = y.grid().nodes().to_vec();
        for (s, t) in [(0, 16), (3, 9), (5, 5)] {
            let r1 = y.remainder(1, s, t).unwrap()[0];
            let r2 = y.remainder(2, s, t).unwrap()[0];
            assert!((r1 - (n[t] - n[s]).powi(2)).abs() < 1e-14, "{r1}");
            assert!((r2 - 2.0 * (n[t] - n[s])).abs() < 1e-14);
        }
        assert_eq!(y.remainder(1, 4, 4).unwrap()[0], 0.0);
        assert!(y.remainder(3, 0, 1).is_err());
    }

    #[test]
    fn taylor_example_seminorm() {
        // k = 1: sup (t−s)^{2−1.2} = 1; k = 2: sup 2(t−s)^{1−0.4} = 2.
        let y = taylor_example();
        let parts = y.remainder_norms(0.4).unwrap();
        assert!((parts[0] - 1.0).abs() < 1e-12, "{parts:?}");
        assert!((parts[1] - 2.0).abs() < 1e-12);
        assert!((y.controlled_seminorm(0.4).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn constant_paths_have_zero_remainders() {
        let g = TimeGrid::dyadic(1.0, 3).unwrap();
        let x = lift(&g, 2, 3, |t| vec![t.sin(), t * t]);
        let y = ControlledPathGrid::from_node_fn(x, |_| {
            vec![vec![1.0, -2.0], vec![0.0; 4], vec![0.0; 8]]
        })
        .unwrap();
        assert_eq!(y.remainder(1, 0, 8).unwrap(), vec![0.0, 0.0]);
        assert_eq!(y.controlled_seminorm(0.3).unwrap(), 0.0);
    }

    #[test]
    fn seminorm_is_homogeneous() {
        let y = taylor_example();
        for c in [-3.0, 0.5, 0.0] {
            let lhs = y.scale(c).controlled_seminorm(0.4).unwrap();
            assert!((lhs - c.abs() * y.controlled_seminorm(0.4).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn shape_errors() {
        let g = TimeGrid::dyadic(1.0, 2).unwrap();
        let x = lift(&g, 2, 2, |t| vec![t, t]);
        assert!(ControlledPathGrid::new(x.clone(), vec![vec![0.0; 10]]).is_err());
        assert!(ControlledPathGrid::new(x.clone(), vec![vec![0.0; 10], vec![0.0; 19]]).is_err());
        assert!(ControlledPathGrid::new(x, vec![vec![0.0; 10], vec![f64::NAN; 20]]).is_err());
    }

    #[test]
    fn delta_identity_holds_on_all_triples() {
        // Ξ_st − Ξ_su − Ξ_ut = −Σ_k Y^(k)♯_su X^(k)_ut for arbitrary (not
        // necessarily controlled) component data.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let g = TimeGrid::dyadic(1.0, 4).unwrap();
        for (d, p) in [(1, 3), (2, 2), (2, 3), (3, 2)] {
            let x = lift(&g, d, p, |t| {
                (0..d)
                    .map(|j| (2.0 * t + j as f64).sin() * (1.0 + t))
                    .collect()
            });
            let y = random_path(x.clone(), &mut rng);
            for s in 0..g.len() {
                for u in s..g.len() {
                    for t in u..g.len() {
                        let xi = |a: usize, b: usize| y.germ_with(a, &x.increment(a, b).unwrap());
                        let lhs = xi(s, t) - xi(s, u) - xi(u, t);
                        let xut = x.increment(u, t).unwrap();
                        let rhs: f64 = -(1..=p)
                            .map(|k| tensor::dot(&y.remainder(k, s, u).unwrap(), xut.level_data(k)))
                            .sum::<f64>();
                        assert!(
                            (lhs - rhs).abs() < 1e-10,
                            "d={d} p={p} ({s},{u},{t}): {lhs} vs {rhs}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn distance_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let g = TimeGrid::dyadic(1.0, 4).unwrap();
        let x = lift(&g, 2, 2, |t| vec![t.cos(), t * t]);
        let xt = lift(&g, 2, 2, |t| vec![t.cos() + 0.1 * t, t * t]);
        let y = random_path(x.clone(), &mut rng);
        assert_eq!(controlled_distance(&y, &y, 0.4).unwrap(), 0.0);
        for _ in 0..5 {
            let a = random_path(x.clone(), &mut rng);
            let b = random_path(xt.clone(), &mut rng);
            let c = random_path(x.clone(), &mut rng);
            let ab = controlled_distance(&a, &b, 0.4).unwrap();
            let bc = controlled_distance(&b, &c, 0.4).unwrap();
            let ac = controlled_distance(&a, &c, 0.4).unwrap();
            assert!(ac <= ab + bc + 1e-12);
            assert!((ab - controlled_distance(&b, &a, 0.4).unwrap()).abs() < 1e-12);
        }
        let other = lift(&TimeGrid::dyadic(1.0, 3).unwrap(), 2, 2, |t| vec![t, t]);
        let z = ControlledPathGrid::zero(other);
        assert!(controlled_distance(&y, &z, 0.4).is_err());
    }

    #[test]
    fn sup_norm_bound() {
        // On [0, 1] with Euclidean norms:
        // max_n ‖Y^(n) − Z^(n)‖_∞ ≤ ‖Y;Z‖ + (1 + ρ(X,0))|Y_0 − Z_0| + ρ(X,X̃)|Z_0|.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = TimeGrid::dyadic(1.0, 5).unwrap();
        for trial in 0..10 {
            let amp = 0.1 * (trial + 1) as f64;
            let x = lift(&g, 2, 3, |t| vec![(4.0 * t).sin(), t * t - t]);
            let xt = lift(&g, 2, 3, move |t| {
                vec![(4.0 * t).sin() + amp * t.powf(0.7), t * t - t]
            });
            let y = random_path(x.clone(), &mut rng);
            let z = random_path(xt.clone(), &mut rng);
            let lhs = sup_distance(&y, &z).unwrap();
            let rhs = controlled_distance(&y, &z, 0.3).unwrap()
                + (1.0 + rho_gamma_from_origin(&x, 0.3).unwrap())
                    * initial_distance(&y, &z).unwrap()
                + rho_gamma(&x, &xt, 0.3).unwrap() * z.initial_norm();
            assert!(lhs <= rhs + 1e-12, "trial {trial}: {lhs} > {rhs}");
        }
    }

    #[test]
    fn linear_combinations() {
        let y = taylor_example();
        let two = ControlledPathGrid::weighted_sum(&[(1.0, &y), (1.0, &y)]).unwrap();
        assert_eq!(two.components(), y.scale(2.0).components());
        let zero = y.add_scaled(-1.0, &y).unwrap();
        assert_eq!(zero.sup_norm(), 0.0);
        assert!((y.sup_norm() - 2.0).abs() < 1e-15);
        assert_eq!(y.initial_norm(), 0.0);
    }
}
