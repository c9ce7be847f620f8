//! Fractional Brownian motion with Hurst index `H ∈ (0, 1/2)`.
//!
//! Paths are drawn exactly on a grid from the Cholesky factor of the
//! covariance matrix `R_H(t_i, t_j)`, one independent draw per component.

mod kernel;

pub use kernel::{kernel_covariance_check, VolterraKernel};

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{ensure, Error, Result};
use crate::par;
use crate::rough_path::{PathSamples, RoughPathGrid, TimeGrid};

/// `R_H(t, s) = ½(t^{2H} + s^{2H} − |t − s|^{2H})`.
pub fn covariance(hurst: f64, t: f64, s: f64) -> Result<f64> {
    ensure!(
        hurst > 0.0 && hurst < 1.0,
        InvalidArgument,
        "Hurst index must lie in (0, 1), got {hurst}"
    );
    ensure!(
        t >= 0.0 && s >= 0.0,
        InvalidArgument,
        "covariance needs t, s >= 0, got ({t}, {s})"
    );
    let e = 2.0 * hurst;
    Ok(0.5 * (t.powf(e) + s.powf(e) - (t - s).abs().powf(e)))
}

/// `true` iff `H < 1 / (2(3d − 1))`, the regime of the compactness argument
/// for discontinuous drifts.
pub fn check_hurst_constraint(hurst: f64, dim: usize) -> bool {
    dim >= 1 && hurst < 1.0 / (2.0 * (3.0 * dim as f64 - 1.0))
}

/// Truncation level `⌊1/γ⌋` used for lifts at regularity `γ`.
pub fn level_for_gamma(gamma: f64) -> usize {
    (1.0 / gamma).floor() as usize
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FbmSpec {
    pub hurst: f64,
    pub dim: usize,
    pub grid: TimeGrid,
    pub seed: u64,
}

impl FbmSpec {
    pub fn new(hurst: f64, dim: usize, grid: TimeGrid, seed: u64) -> Result<Self> {
        ensure!(
            hurst > 0.0 && hurst < 0.5,
            InvalidArgument,
            "Hurst index must lie in (0, 1/2), got {hurst}"
        );
        ensure!(dim >= 1, InvalidArgument, "dimension must be positive");
        Ok(Self {
            hurst,
            dim,
            grid,
            seed,
        })
    }
}

/// Exact sampler holding the Cholesky factor for one `(H, grid)` pair.
#[derive(Debug, Clone)]
pub struct FbmSampler {
    spec: FbmSpec,
    /// Lower factor for the nodes `t_1..t_N` (`B_0 = 0` is fixed).
    factor: DMatrix<f64>,
    jitter: f64,
}

impl FbmSampler {
    pub fn new(spec: FbmSpec) -> Result<Self> {
        let nodes = &spec.grid.nodes()[1..];
        let n = nodes.len();
        let cov = DMatrix::from_fn(n, n, |i, j| {
            covariance(spec.hurst, nodes[i], nodes[j])
                .expect("validated Hurst index and nonnegative nodes")
        });
        let mut jitter = 0.0;
        let factor = match cov.clone().cholesky() {
            Some(c) => c.unpack(),
            None => {
                jitter = 1e-12 * cov.trace() / n as f64;
                let shifted = cov + DMatrix::identity(n, n) * jitter;
                shifted
                    .cholesky()
                    .ok_or_else(|| {
                        Error::Config(format!(
                            "covariance matrix of {n} nodes is not positive definite even with jitter {jitter:e}"
                        ))
                    })?
                    .unpack()
            }
        };
        Ok(Self {
            spec,
            factor,
            jitter,
        })
    }

    pub fn spec(&self) -> &FbmSpec {
        &self.spec
    }

    /// Diagonal shift that was needed for the factorization (0 if none).
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// The path for the spec's seed.
    pub fn sample(&self) -> PathSamples {
        self.sample_stream(0)
    }

    /// Draw number `stream` of the seed's family; streams are independent
    /// and do not depend on how many draws run concurrently.
    pub fn sample_stream(&self, stream: u64) -> PathSamples {
        let mut rng = ChaCha8Rng::seed_from_u64(self.spec.seed);
        rng.set_stream(stream);
        let n = self.factor.nrows();
        let d = self.spec.dim;
        let mut data = vec![0.0; (n + 1) * d];
        for j in 0..d {
            let z = DVector::from_iterator(n, (0..n).map(|_| StandardNormal.sample(&mut rng)));
            let b = &self.factor * z;
            for (i, v) in b.iter().enumerate() {
                data[(i + 1) * d + j] = *v;
            }
        }
        PathSamples::new(d, data).expect("dimension validated")
    }

    /// `count` independent draws (streams `0..count`).
    pub fn sample_many(&self, count: usize) -> Vec<PathSamples> {
        par::map(count, |k| self.sample_stream(k as u64))
    }
}

/// Samples one path for `spec`.
pub fn sample(spec: &FbmSpec) -> Result<PathSamples> {
    Ok(FbmSampler::new(spec.clone())?.sample())
}

/// Canonical lift of the piecewise-linear interpolation of an fBm sample,
/// truncated at `p = ⌊1/γ⌋`. Requires `0 < γ < H`.
pub fn lift_fbm(
    grid: &TimeGrid,
    path: &PathSamples,
    hurst: f64,
    gamma: f64,
) -> Result<RoughPathGrid> {
    ensure!(
        gamma > 0.0,
        InvalidArgument,
        "γ must be positive, got {gamma}"
    );
    ensure!(
        gamma < hurst,
        InvalidArgument,
        "the lift needs γ < H, got γ = {gamma}, H = {hurst}"
    );
    RoughPathGrid::lift_piecewise_linear(grid, path, level_for_gamma(gamma))
}
