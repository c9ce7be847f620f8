//! Rough paths sampled on a time grid.
//!
//! A [`RoughPathGrid`] keeps one signature per grid interval; the increment
//! `X_st` between two nodes is the Chen product of the covered segments, so
//! Chen's relation holds by construction. Hölder-type seminorms are discrete
//! sups over node pairs and therefore lower bounds of the continuous ones.

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::par;
use crate::tensor::{self, TruncatedTensor};

/// Strictly increasing nodes `0 = t_0 < … < t_N = T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct TimeGrid {
    nodes: Vec<f64>,
}

impl TryFrom<Vec<f64>> for TimeGrid {
    type Error = Error;
    fn try_from(nodes: Vec<f64>) -> Result<Self> {
        Self::new(nodes)
    }
}

impl From<TimeGrid> for Vec<f64> {
    fn from(g: TimeGrid) -> Self {
        g.nodes
    }
}

impl TimeGrid {
    pub fn new(nodes: Vec<f64>) -> Result<Self> {
        ensure!(
            nodes.len() >= 2,
            InvalidArgument,
            "a grid needs at least 2 nodes, got {}",
            nodes.len()
        );
        ensure!(
            nodes[0] == 0.0,
            InvalidArgument,
            "first grid node must be 0, got {}",
            nodes[0]
        );
        ensure!(
            nodes.iter().all(|t| t.is_finite()),
            InvalidArgument,
            "grid nodes must be finite"
        );
        ensure!(
            nodes.windows(2).all(|w| w[0] < w[1]),
            InvalidArgument,
            "grid nodes must be strictly increasing"
        );
        Ok(Self { nodes })
    }

    /// `intervals` equal cells on `[0, horizon]`.
    pub fn uniform(horizon: f64, intervals: usize) -> Result<Self> {
        ensure!(
            horizon > 0.0 && horizon.is_finite(),
            InvalidArgument,
            "horizon must be positive, got {horizon}"
        );
        ensure!(
            intervals >= 1,
            InvalidArgument,
            "need at least one interval"
        );
        let h = horizon / intervals as f64;
        let mut nodes: Vec<f64> = (0..=intervals).map(|i| i as f64 * h).collect();
        nodes[intervals] = horizon;
        Self::new(nodes)
    }

    /// Uniform grid with `2^k` cells.
    pub fn dyadic(horizon: f64, k: u32) -> Result<Self> {
        ensure!(k <= 26, InvalidArgument, "grid exponent {k} too large");
        Self::uniform(horizon, 1usize << k)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Number of nodes (`N + 1`).
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of cells `N`.
    pub fn intervals(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    pub fn node(&self, i: usize) -> f64 {
        self.nodes[i]
    }

    /// Index of the node equal to `t` (up to `1e-12·T`).
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let tol = 1e-12 * self.horizon();
        let pos = self.nodes.partition_point(|&x| x < t - tol);
        if pos < self.nodes.len() && (self.nodes[pos] - t).abs() <= tol {
            Ok(pos)
        } else {
            Err(Error::NotAGridNode(t))
        }
    }

    /// Splits every cell into `factor` equal sub-cells.
    pub fn refine(&self, factor: usize) -> Result<Self> {
        ensure!(
            factor >= 1,
            InvalidArgument,
            "refinement factor must be positive"
        );
        let mut nodes = Vec::with_capacity(self.intervals() * factor + 1);
        for w in self.nodes.windows(2) {
            let h = (w[1] - w[0]) / factor as f64;
            nodes.extend((0..factor).map(|m| w[0] + m as f64 * h));
        }
        nodes.push(self.horizon());
        Self::new(nodes)
    }

    /// Cell containing `t`, with the local fraction `θ ∈ [0, 1]`.
    pub fn locate(&self, t: f64) -> (usize, f64) {
        let n = self.intervals();
        let cell = self
            .nodes
            .partition_point(|&x| x <= t)
            .saturating_sub(1)
            .min(n - 1);
        let (a, b) = (self.nodes[cell], self.nodes[cell + 1]);
        (cell, ((t - a) / (b - a)).clamp(0.0, 1.0))
    }
}

/// Values of an `R^d`-valued path at the nodes of a grid, node-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSamples {
    dim: usize,
    data: Vec<f64>,
}

impl PathSamples {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        ensure!(dim >= 1, InvalidArgument, "dimension must be positive");
        ensure!(
            data.len().is_multiple_of(dim),
            Shape,
            "{} values do not split into {dim}-vectors",
            data.len()
        );
        Ok(Self { dim, data })
    }

    /// Samples `f(t)` at every node of `grid`.
    pub fn from_fn<F: Fn(f64) -> Vec<f64>>(grid: &TimeGrid, dim: usize, f: F) -> Result<Self> {
        let mut data = Vec::with_capacity(grid.len() * dim);
        for &t in grid.nodes() {
            let v = f(t);
            ensure!(
                v.len() == dim,
                Shape,
                "path value has {} entries, expected {dim}",
                v.len()
            );
            data.extend(v);
        }
        Self::new(dim, data)
    }

    /// The constant zero path on `nodes` nodes.
    pub fn zeros(dim: usize, nodes: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * nodes],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn point_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// `X_t − X_s` between nodes `i` and `j`.
    pub fn increment(&self, i: usize, j: usize) -> Vec<f64> {
        self.point(j)
            .iter()
            .zip(self.point(i))
            .map(|(b, a)| b - a)
            .collect()
    }

    /// Pointwise `self + c·other`.
    pub fn add_scaled(&self, c: f64, other: &Self) -> Result<Self> {
        ensure!(
            self.dim == other.dim && self.data.len() == other.data.len(),
            Shape,
            "path shapes differ"
        );
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + c * b)
            .collect();
        Ok(Self {
            dim: self.dim,
            data,
        })
    }

    /// Keeps every `stride`-th node (coarse sub-sampling of a nested grid).
    pub fn subsample(&self, stride: usize) -> Self {
        let data = (0..self.len())
            .step_by(stride.max(1))
            .flat_map(|i| self.point(i).to_vec())
            .collect();
        Self {
            dim: self.dim,
            data,
        }
    }

    /// Linear interpolation onto the `factor`-refined grid.
    pub fn refine_linear(&self, factor: usize) -> Self {
        let n = self.len();
        let mut data = Vec::with_capacity(((n - 1) * factor + 1) * self.dim);
        for i in 0..n.saturating_sub(1) {
            let (a, b) = (self.point(i), self.point(i + 1));
            for m in 0..factor {
                let th = m as f64 / factor as f64;
                data.extend(a.iter().zip(b).map(|(x, y)| x + th * (y - x)));
            }
        }
        data.extend_from_slice(self.point(n - 1));
        Self {
            dim: self.dim,
            data,
        }
    }

    /// Linear interpolation at time `t` on `grid`.
    pub fn interpolate(&self, grid: &TimeGrid, t: f64, out: &mut [f64]) {
        let (cell, th) = grid.locate(t);
        let (a, b) = (self.point(cell), self.point(cell + 1));
        for ((o, x), y) in out.iter_mut().zip(a).zip(b) {
            *o = x + th * (y - x);
        }
    }
}

/// Supremum over node pairs `s < t` of `|f(s, t)| / (t − s)^γ`.
pub fn holder_seminorm<F>(grid: &TimeGrid, gamma: f64, f: F) -> Result<f64>
where
    F: Fn(usize, usize) -> f64 + Sync + Send,
{
    ensure!(
        gamma > 0.0,
        InvalidArgument,
        "Hölder exponent must be positive, got {gamma}"
    );
    let nodes = grid.nodes();
    Ok(par::max(grid.len(), |i| {
        (i + 1..nodes.len())
            .map(|j| f(i, j).abs() / (nodes[j] - nodes[i]).powf(gamma))
            .fold(0.0, par::nan_max)
    }))
}

/// Discrete `γ`-Hölder seminorm of a path: `sup |x_t − x_s| / (t − s)^γ`
/// with the Euclidean norm.
pub fn path_holder(grid: &TimeGrid, path: &PathSamples, gamma: f64) -> Result<f64> {
    ensure!(
        path.len() == grid.len(),
        Shape,
        "path has {} nodes, grid has {}",
        path.len(),
        grid.len()
    );
    holder_seminorm(grid, gamma, |i, j| tensor::norm(&path.increment(i, j)))
}

/// A rough path stored as per-interval signatures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RoughPathDocument", into = "RoughPathDocument")]
pub struct RoughPathGrid {
    grid: TimeGrid,
    dim: usize,
    level: usize,
    segments: Vec<TruncatedTensor>,
}

/// JSON form: `{grid, dim, level, segment_signatures}` with each signature
/// a list of level arrays.
#[derive(Serialize, Deserialize)]
struct RoughPathDocument {
    grid: TimeGrid,
    dim: usize,
    level: usize,
    segment_signatures: Vec<Vec<Vec<f64>>>,
}

impl From<RoughPathGrid> for RoughPathDocument {
    fn from(x: RoughPathGrid) -> Self {
        RoughPathDocument {
            grid: x.grid,
            dim: x.dim,
            level: x.level,
            segment_signatures: x.segments.into_iter().map(Into::into).collect(),
        }
    }
}

impl TryFrom<RoughPathDocument> for RoughPathGrid {
    type Error = Error;
    fn try_from(doc: RoughPathDocument) -> Result<Self> {
        let segments = doc
            .segment_signatures
            .into_iter()
            .map(|levels| TruncatedTensor::from_levels(doc.dim, levels))
            .collect::<Result<Vec<_>>>()?;
        RoughPathGrid::from_segments(doc.grid, doc.dim, doc.level, segments)
    }
}

impl RoughPathGrid {
    /// Assembles a rough path from explicit segment signatures.
    pub fn from_segments(
        grid: TimeGrid,
        dim: usize,
        level: usize,
        segments: Vec<TruncatedTensor>,
    ) -> Result<Self> {
        ensure!(
            segments.len() == grid.intervals(),
            Shape,
            "{} segment signatures for {} grid intervals",
            segments.len(),
            grid.intervals()
        );
        for (i, s) in segments.iter().enumerate() {
            ensure!(
                s.dim() == dim && s.level() == level,
                Shape,
                "segment {i} has the wrong shape"
            );
            ensure!(
                s.is_group_like(1e-12),
                InvalidArgument,
                "segment {i} is not group-like (level 0 = {})",
                s.scalar()
            );
        }
        Ok(Self {
            grid,
            dim,
            level,
            segments,
        })
    }

    /// Canonical lift of the piecewise-linear interpolation of `samples`:
    /// every segment signature is `exp(x_{t_{i+1}} − x_{t_i})`.
    pub fn lift_piecewise_linear(
        grid: &TimeGrid,
        samples: &PathSamples,
        level: usize,
    ) -> Result<Self> {
        ensure!(grid.len() >= 2, InvalidArgument, "need at least 2 nodes");
        ensure!(
            samples.len() == grid.len(),
            Shape,
            "{} samples for {} grid nodes",
            samples.len(),
            grid.len()
        );
        ensure!(
            samples.data().iter().all(|v| v.is_finite()),
            NonFinite,
            "path samples contain non-finite values"
        );
        let segments = (0..grid.intervals())
            .map(|i| TruncatedTensor::segment_signature(&samples.increment(i, i + 1), level))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            grid: grid.clone(),
            dim: samples.dim(),
            level,
            segments,
        })
    }

    /// Lift of a path given as a function of time: each segment is the
    /// Chen product of `refine` linear pieces, so the signature error per
    /// cell is `O((h/refine)^2)` for a smooth path.
    pub fn lift_function<F>(
        grid: &TimeGrid,
        dim: usize,
        level: usize,
        refine: usize,
        x: F,
    ) -> Result<Self>
    where
        F: Fn(f64) -> Vec<f64> + Sync,
    {
        ensure!(
            refine >= 1,
            InvalidArgument,
            "refinement factor must be positive"
        );
        let fine = grid.refine(refine)?;
        let samples = PathSamples::from_fn(&fine, dim, &x)?;
        ensure!(
            samples.data().iter().all(|v| v.is_finite()),
            NonFinite,
            "path values contain non-finite entries"
        );
        let segments = par::try_map(grid.intervals(), |i| {
            let mut seg = TruncatedTensor::identity(dim, level)?;
            for k in i * refine..(i + 1) * refine {
                seg.mul_assign(&TruncatedTensor::segment_signature(
                    &samples.increment(k, k + 1),
                    level,
                )?)?;
            }
            Ok(seg)
        })?;
        Ok(Self {
            grid: grid.clone(),
            dim,
            level,
            segments,
        })
    }

    /// The path with identity increments, i.e. the lift of a constant path.
    pub fn trivial(grid: &TimeGrid, dim: usize, level: usize) -> Result<Self> {
        let id = TruncatedTensor::identity(dim, level)?;
        Ok(Self {
            grid: grid.clone(),
            dim,
            level,
            segments: vec![id; grid.intervals()],
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn segments(&self) -> &[TruncatedTensor] {
        &self.segments
    }

    /// `X_st` for node indices `s ≤ t`.
    pub fn increment(&self, s: usize, t: usize) -> Result<TruncatedTensor> {
        ensure!(
            s <= t,
            InvalidArgument,
            "increment needs s <= t, got {s} > {t}"
        );
        ensure!(
            t < self.grid.len(),
            InvalidArgument,
            "node {t} out of range"
        );
        let mut acc = TruncatedTensor::identity(self.dim, self.level)?;
        for seg in &self.segments[s..t] {
            acc.mul_assign(seg)?;
        }
        Ok(acc)
    }

    /// `X_st` for grid times; off-grid times are rejected.
    pub fn increment_at_times(&self, s: f64, t: f64) -> Result<TruncatedTensor> {
        let i = self.grid.index_of(s)?;
        let j = self.grid.index_of(t)?;
        self.increment(i, j)
    }

    /// Calls `visit(t, X_st)` for every node `t > s`, building the increments
    /// by successive right multiplication.
    pub fn for_each_increment_from<F>(&self, s: usize, mut visit: F)
    where
        F: FnMut(usize, &TruncatedTensor),
    {
        let mut acc = TruncatedTensor::identity(self.dim, self.level)
            .expect("shape validated at construction");
        for t in s + 1..self.grid.len() {
            acc.mul_assign(&self.segments[t - 1])
                .expect("segments share the path's shape");
            visit(t, &acc);
        }
    }

    /// Increment of the canonical lift of the piecewise-linear path between
    /// arbitrary times `s ≤ t`; partial cells contribute `exp(θ·Δx)`.
    ///
    /// Only meaningful for lifts of piecewise-linear paths, where each stored
    /// segment is the exponential of its first level.
    pub fn increment_between(&self, s: f64, t: f64) -> Result<TruncatedTensor> {
        ensure!(
            s <= t,
            InvalidArgument,
            "increment needs s <= t, got {s} > {t}"
        );
        let horizon = self.grid.horizon();
        ensure!(
            s >= 0.0 && t <= horizon * (1.0 + 1e-14),
            InvalidArgument,
            "times outside [0, {horizon}]"
        );
        let nodes = self.grid.nodes();
        let (cs, ths) = self.grid.locate(s);
        let (ct, tht) = self.grid.locate(t);
        let scaled = |cell: usize, frac: f64| {
            let inc: Vec<f64> = self.segments[cell]
                .level_data(1)
                .iter()
                .map(|v| v * frac)
                .collect();
            TruncatedTensor::segment_signature(&inc, self.level)
        };
        if cs == ct {
            return scaled(cs, tht - ths);
        }
        let mut acc = scaled(cs, 1.0 - ths)?;
        for seg in &self.segments[cs + 1..ct] {
            acc.mul_assign(seg)?;
        }
        if t > nodes[ct] {
            acc.mul_assign(&scaled(ct, tht)?)?;
        }
        Ok(acc)
    }

    fn check_node(&self, i: usize) -> Result<()> {
        ensure!(
            i < self.grid.len(),
            InvalidArgument,
            "node {i} out of range 0..{}",
            self.grid.len()
        );
        Ok(())
    }

    /// `max |X_st − X_su ⊗ X_ut|` for nodes `s ≤ u ≤ t`.
    pub fn chen_defect(&self, s: usize, u: usize, t: usize) -> Result<f64> {
        self.check_node(t)?;
        ensure!(
            s <= u && u <= t,
            InvalidArgument,
            "chen_defect needs s <= u <= t, got ({s}, {u}, {t})"
        );
        chen_defect_of(
            &self.increment(s, t)?,
            &self.increment(s, u)?,
            &self.increment(u, t)?,
        )
    }

    /// `max_n ‖sym(X^(n)_st) − (X^(1)_st)^{⊗n}/n!‖_∞`.
    pub fn symmetry_defect(&self, s: usize, t: usize) -> Result<f64> {
        self.check_node(t)?;
        ensure!(s <= t, InvalidArgument, "symmetry_defect needs s <= t");
        Ok(symmetry_defect_of(&self.increment(s, t)?))
    }

    /// Per-level discrete norms `sup |X^(n)_st| / (t − s)^{nγ}`, `n = 1..=p`.
    pub fn level_holder_norms(&self, gamma: f64) -> Result<Vec<f64>> {
        rho_gamma_levels(self, None, gamma)
    }

    /// Shared-shape check for two paths.
    pub fn check_same_shape(&self, other: &Self) -> Result<()> {
        ensure!(
            self.dim == other.dim && self.level == other.level,
            Shape,
            "rough paths differ in dimension or level"
        );
        ensure!(
            self.grid == other.grid,
            Shape,
            "rough paths live on different grids"
        );
        Ok(())
    }

    /// JSON document (see the type docs for the layout).
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// `max |x_st − x_su ⊗ x_ut|` for explicitly given increments.
pub fn chen_defect_of(
    xst: &TruncatedTensor,
    xsu: &TruncatedTensor,
    xut: &TruncatedTensor,
) -> Result<f64> {
    Ok(xst.sub(&xsu.mul(xut)?)?.max_abs())
}

/// Symmetry defect of a single group element.
pub fn symmetry_defect_of(x: &TruncatedTensor) -> f64 {
    let first = x.level_data(1);
    let mut power = vec![1.0];
    let mut worst = 0.0_f64;
    for n in 1..=x.level() {
        power = tensor::outer(&power, first);
        let inv = 1.0 / n as f64;
        power.iter_mut().for_each(|v| *v *= inv);
        let sym = x.symmetrize(n).expect("level in range");
        let d = sym
            .iter()
            .zip(&power)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        worst = worst.max(d);
    }
    worst
}

fn rho_gamma_levels(x: &RoughPathGrid, y: Option<&RoughPathGrid>, gamma: f64) -> Result<Vec<f64>> {
    ensure!(
        gamma > 0.0,
        InvalidArgument,
        "γ must be positive, got {gamma}"
    );
    if let Some(y) = y {
        x.check_same_shape(y)?;
    }
    let p = x.level();
    let nodes = x.grid().nodes();
    let rows: Vec<Vec<f64>> = par::map(x.grid().len(), |s| {
        let mut best = vec![0.0_f64; p];
        let mut ys: Vec<TruncatedTensor> = Vec::new();
        if let Some(y) = y {
            y.for_each_increment_from(s, |_, inc| ys.push(inc.clone()));
        }
        x.for_each_increment_from(s, |t, inc| {
            let dt = nodes[t] - nodes[s];
            for n in 1..=p {
                let diff = match y {
                    Some(_) => {
                        let other = ys[t - s - 1].level_data(n);
                        inc.level_data(n)
                            .iter()
                            .zip(other)
                            .map(|(a, b)| (a - b) * (a - b))
                            .sum::<f64>()
                            .sqrt()
                    }
                    None => tensor::norm(inc.level_data(n)),
                };
                best[n - 1] = par::nan_max(best[n - 1], diff / dt.powf(n as f64 * gamma));
            }
        });
        best
    });
    Ok((0..p)
        .map(|n| rows.iter().map(|r| r[n]).fold(0.0, par::nan_max))
        .collect())
}

/// `ρ_γ(X, Y) = Σ_n sup |X^(n)_st − Y^(n)_st| / (t − s)^{nγ}` over node pairs,
/// with the Euclidean norm on each level.
pub fn rho_gamma(x: &RoughPathGrid, y: &RoughPathGrid, gamma: f64) -> Result<f64> {
    Ok(rho_gamma_levels(x, Some(y), gamma)?.iter().sum())
}

/// `ρ_γ(X, 0)` with the identity-valued path as the origin.
pub fn rho_gamma_from_origin(x: &RoughPathGrid, gamma: f64) -> Result<f64> {
    Ok(rho_gamma_levels(x, None, gamma)?.iter().sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lift_function_area() {
        let g = TimeGrid::uniform(1.0, 4).unwrap();
        let x = RoughPathGrid::lift_function(&g, 2, 2, 256, |t| vec![t, t * t]).unwrap();
        let l2 = x.increment(0, 4).unwrap().level_data(2).to_vec();
        assert!((l2[1] - l2[2] - 1.0 / 3.0).abs() < 1e-5, "{l2:?}");
        let lin = RoughPathGrid::lift_function(&g, 1, 3, 7, |t| vec![2.0 * t]).unwrap();
        let pl = RoughPathGrid::lift_piecewise_linear(
            &g,
            &PathSamples::from_fn(&g, 1, |t| vec![2.0 * t]).unwrap(),
            3,
        )
        .unwrap();
        assert!(
            lin.increment(0, 4)
                .unwrap()
                .sub(&pl.increment(0, 4).unwrap())
                .unwrap()
                .max_abs()
                < 1e-14
        );
    }
    use proptest::prelude::*;

    fn lift(grid: &TimeGrid, dim: usize, p: usize, f: impl Fn(f64) -> Vec<f64>) -> RoughPathGrid {
        RoughPathGrid::lift_piecewise_linear(grid, &PathSamples::from_fn(grid, dim, f).unwrap(), p)
            .unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(TimeGrid::new(vec![0.0]).is_err());
        assert!(TimeGrid::new(vec![0.1, 1.0]).is_err());
        assert!(TimeGrid::new(vec![0.0, 0.5, 0.5]).is_err());
        let g = TimeGrid::dyadic(1.0, 3).unwrap();
        assert_eq!(g.intervals(), 8);
        assert_eq!(g.index_of(0.375).unwrap(), 3);
        assert!(matches!(g.index_of(0.3), Err(Error::NotAGridNode(_))));
        let r = g.refine(4).unwrap();
        assert_eq!(r.intervals(), 32);
        assert_eq!(r.node(4), g.node(1));
        let (cell, th) = g.locate(0.4);
        assert_eq!(cell, 3);
        assert!((th - 0.2).abs() < 1e-14);
    }

    #[test]
    fn linear_path_level_two() {
        let g = TimeGrid::uniform(1.0, 2).unwrap();
        let x = lift(&g, 1, 2, |t| vec![t]);
        let inc = x.increment(0, 2).unwrap();
        assert!((inc.level_data(2)[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn increment_examples() {
        let g = TimeGrid::dyadic(1.0, 2).unwrap();
        let x = lift(&g, 1, 2, |t| vec![t]);
        assert_eq!(
            x.increment(2, 2).unwrap(),
            TruncatedTensor::identity(1, 2).unwrap()
        );
        let inc = x.increment_at_times(0.25, 0.75).unwrap();
        assert!((inc.level_data(1)[0] - 0.5).abs() < 1e-15);
        assert!((inc.level_data(2)[0] - 0.125).abs() < 1e-15);
        let two = x.segments()[1].mul(&x.segments()[2]).unwrap();
        assert_eq!(x.increment(1, 3).unwrap(), two);
        assert!(x.increment_at_times(0.1, 0.75).is_err());
        assert!(x.increment(3, 1).is_err());
    }

    #[test]
    fn constant_path_has_identity_increments() {
        let g = TimeGrid::dyadic(1.0, 3).unwrap();
        let x = lift(&g, 2, 3, |_| vec![1.5, -2.0]);
        assert_eq!(
            x.increment(0, 8).unwrap(),
            TruncatedTensor::identity(2, 3).unwrap()
        );
    }

    #[test]
    fn polynomial_path_iterated_integral() {
        // ∫_0^1 X^1 dX^2 for X = (t, t²) is ∫ r·2r dr = 2/3; the area is 1/6.
        let g = TimeGrid::dyadic(1.0, 12).unwrap();
        let x = lift(&g, 2, 2, |t| vec![t, t * t]);
        let l2 = x
            .increment(0, g.intervals())
            .unwrap()
            .level_data(2)
            .to_vec();
        assert!((l2[1] - 2.0 / 3.0).abs() < 1e-6, "{}", l2[1]);
        assert!((0.5 * (l2[1] - l2[2]) - 1.0 / 6.0).abs() < 1e-6);
    }

    #[test]
    fn chen_and_symmetry_defects() {
        let g = TimeGrid::dyadic(1.0, 4).unwrap();
        let x = lift(&g, 2, 3, |t| vec![(7.0 * t).sin(), t * t - t]);
        for (s, u, t) in [(0, 3, 9), (2, 2, 7), (4, 10, 10), (0, 8, 16)] {
            assert!(x.chen_defect(s, u, t).unwrap() < 1e-14);
        }
        assert_eq!(x.chen_defect(3, 3, 9).unwrap(), 0.0);
        assert!(x.chen_defect(3, 2, 9).is_err());
        assert!(x.symmetry_defect(0, 16).unwrap() < 1e-14);

        let x1 = lift(&g, 1, 4, |t| vec![(3.0 * t).cos()]);
        assert!(x1.symmetry_defect(0, 16).unwrap() < 1e-14);
    }

    #[test]
    fn corrupted_entry_is_caught() {
        let g = TimeGrid::dyadic(1.0, 3).unwrap();
        let x = lift(&g, 2, 2, |t| vec![t, t * t]);
        let eps = 3.0e-3;
        let mut xst = x.increment(1, 6).unwrap();
        xst.level_data_mut(2)[3] += eps;
        let d = chen_defect_of(
            &xst,
            &x.increment(1, 4).unwrap(),
            &x.increment(4, 6).unwrap(),
        )
        .unwrap();
        assert!((d - eps).abs() < 1e-15, "{d}");
    }

    #[test]
    fn antisymmetric_corruption_is_invisible_to_symmetry_defect() {
        let g = TimeGrid::dyadic(1.0, 2).unwrap();
        let x = lift(&g, 2, 2, |t| vec![t, 2.0 * t * t]);
        let eps = 0.25;
        let mut xst = x.increment(0, 4).unwrap();
        let l2 = xst.level_data_mut(2);
        l2[1] += eps;
        l2[2] -= eps;
        assert!(symmetry_defect_of(&xst) < 1e-15);
        let d = chen_defect_of(
            &xst,
            &x.increment(0, 2).unwrap(),
            &x.increment(2, 4).unwrap(),
        )
        .unwrap();
        assert!((d - eps).abs() < 1e-15);
    }

    #[test]
    fn holder_examples() {
        let g = TimeGrid::dyadic(1.0, 5).unwrap();
        let n = g.nodes().to_vec();
        let lin = holder_seminorm(&g, 1.0, |i, j| n[j] - n[i]).unwrap();
        assert!((lin - 1.0).abs() < 1e-12);
        let quad = holder_seminorm(&g, 1.0, |i, j| (n[j] - n[i]).powi(2)).unwrap();
        assert!((quad - 1.0).abs() < 1e-15);
        assert_eq!(holder_seminorm(&g, 0.5, |_, _| 0.0).unwrap(), 0.0);
        assert!(holder_seminorm(&g, 0.0, |_, _| 0.0).is_err());
    }

    #[test]
    fn rho_gamma_examples() {
        let g = TimeGrid::dyadic(1.0, 5).unwrap();
        let x = lift(&g, 1, 2, |t| vec![t]);
        let zero = RoughPathGrid::trivial(&g, 1, 2).unwrap();
        assert_eq!(rho_gamma(&x, &x, 0.4).unwrap(), 0.0);
        let r = rho_gamma(&x, &zero, 0.4).unwrap();
        assert!((r - 1.5).abs() < 1e-12, "{r}");
        assert!((rho_gamma(&zero, &x, 0.4).unwrap() - r).abs() < 1e-15);
        assert!((rho_gamma_from_origin(&x, 0.4).unwrap() - r).abs() < 1e-15);
        let other = lift(&TimeGrid::dyadic(1.0, 4).unwrap(), 1, 2, |t| vec![t]);
        assert!(rho_gamma(&x, &other, 0.4).is_err());
    }

    #[test]
    fn off_grid_increments_match_grid_increments() {
        let g = TimeGrid::dyadic(1.0, 3).unwrap();
        let x = lift(&g, 2, 3, |t| vec![(5.0 * t).sin(), t.powi(3)]);
        let a = x.increment_between(0.25, 0.75).unwrap();
        let b = x.increment(2, 6).unwrap();
        assert!(a.sub(&b).unwrap().max_abs() < 1e-15);
        // Splitting a cell: X_{s,u} ⊗ X_{u,t} = X_{s,t} for an interior u.
        let whole = x.increment_between(0.1, 0.9).unwrap();
        let split = x
            .increment_between(0.1, 0.33)
            .unwrap()
            .mul(&x.increment_between(0.33, 0.9).unwrap())
            .unwrap();
        assert!(whole.sub(&split).unwrap().max_abs() < 1e-14);
        let inner = x.increment_between(0.3, 0.35).unwrap();
        assert!(symmetry_defect_of(&inner) < 1e-15);
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let g = TimeGrid::dyadic(1.0, 3).unwrap();
        let x = lift(&g, 2, 3, |t| vec![(1.0 / 3.0 + t).exp(), (t * 1e-7).sin()]);
        let text = x.to_json().unwrap();
        assert!(text.contains("segment_signatures"));
        let back = RoughPathGrid::from_json(&text).unwrap();
        assert_eq!(back, x);
        assert!(RoughPathGrid::from_json(&text.replace("\"level\":3", "\"level\":2")).is_err());
    }

    proptest! {
        #[test]
        fn lipschitz_paths_satisfy_level_bounds(
            slopes in proptest::collection::vec(-1.0f64..1.0, 16),
        ) {
            // Path with per-cell slope bounded by 1: |X^(n)_st| ≤ (t−s)^n / n!.
            let g = TimeGrid::dyadic(1.0, 4).unwrap();
            let mut data = vec![0.0];
            for (i, s) in slopes.iter().enumerate() {
                data.push(data[i] + s / 16.0);
            }
            let x = RoughPathGrid::lift_piecewise_linear(&g, &PathSamples::new(1, data).unwrap(), 3).unwrap();
            let norms = x.level_holder_norms(1.0).unwrap();
            let mut fact = 1.0;
            for (n, v) in norms.iter().enumerate() {
                fact *= (n + 1) as f64;
                prop_assert!(*v <= 1.0 / fact + 1e-12);
            }
        }

        #[test]
        fn lifts_satisfy_chen_everywhere(
            pts in proptest::collection::vec(proptest::collection::vec(-1.0f64..1.0, 2), 9),
            s in 0usize..9, u in 0usize..9, t in 0usize..9,
        ) {
            let g = TimeGrid::dyadic(1.0, 3).unwrap();
            let x = RoughPathGrid::lift_piecewise_linear(
                &g, &PathSamples::new(2, pts.concat()).unwrap(), 4).unwrap();
            let mut v = [s, u, t];
            v.sort_unstable();
            prop_assert!(x.chen_defect(v[0], v[1], v[2]).unwrap() < 1e-12);
            prop_assert!(x.symmetry_defect(v[0], v[2]).unwrap() < 1e-12);
        }
    }
}
