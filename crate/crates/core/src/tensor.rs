//! Dense truncated tensor algebra over `R^d`.
//!
//! An element stores one row-major array per level `n = 0..=p`, level `n`
//! holding `d^n` entries with the first tensor index most significant. The
//! product is the truncated concatenation product
//! `(a ⊗ b)^(n) = Σ_k a^(n-k) ⊗ b^(k)`.

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};

/// Largest number of entries allowed in the top level (`d^p`).
pub const MAX_TOP_LEVEL_ENTRIES: usize = 16_384;

/// Row-major index of `digits` in a tensor of the given dimension.
#[inline]
pub fn flat_index(dim: usize, digits: &[usize]) -> usize {
    digits.iter().fold(0, |acc, &i| acc * dim + i)
}

/// Decodes a row-major index into `n` digits base `dim`.
pub fn digits_of(dim: usize, n: usize, mut flat: usize) -> Vec<usize> {
    let mut digits = vec![0; n];
    for slot in digits.iter_mut().rev() {
        *slot = flat % dim;
        flat /= dim;
    }
    digits
}

/// Outer product of two level arrays: index concatenation `a` then `b`.
pub fn outer(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for &x in a {
        out.extend(b.iter().map(|&y| x * y));
    }
    out
}

/// Contracts the leading indices of `y` (rank `m + k`) against `x` (rank `m`),
/// leaving a rank-`k` array of length `y.len() / x.len()`.
pub fn contract_leading(y: &[f64], x: &[f64]) -> Vec<f64> {
    let tail = y.len() / x.len();
    let mut out = vec![0.0; tail];
    for (row, &xv) in y.chunks_exact(tail).zip(x) {
        if xv != 0.0 {
            for (o, &v) in out.iter_mut().zip(row) {
                *o += xv * v;
            }
        }
    }
    out
}

/// Full contraction `Σ y_I x_I` of two arrays of the same length.
#[inline]
pub fn dot(y: &[f64], x: &[f64]) -> f64 {
    y.iter().zip(x).map(|(a, b)| a * b).sum()
}

/// Euclidean (Hilbert-Schmidt) norm of a level array.
#[inline]
pub fn norm(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Maximum absolute entry.
#[inline]
pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// One element of `T^(p)(R^d)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncatedTensor {
    dim: usize,
    levels: Vec<Vec<f64>>,
}

pub(crate) fn check_envelope(dim: usize, level: usize) -> Result<()> {
    ensure!(dim >= 1, InvalidArgument, "dimension must be positive");
    ensure!(
        level >= 1,
        InvalidArgument,
        "truncation level must be at least 1"
    );
    let top = (dim as u128).checked_pow(level as u32).unwrap_or(u128::MAX);
    ensure!(
        top <= MAX_TOP_LEVEL_ENTRIES as u128,
        InvalidArgument,
        "d^p = {dim}^{level} exceeds the supported {MAX_TOP_LEVEL_ENTRIES} entries"
    );
    Ok(())
}

impl TruncatedTensor {
    /// The zero element.
    pub fn zero(dim: usize, level: usize) -> Result<Self> {
        check_envelope(dim, level)?;
        let levels = (0..=level).map(|n| vec![0.0; dim.pow(n as u32)]).collect();
        Ok(Self { dim, levels })
    }

    /// The unit `(1, 0, …, 0)`.
    pub fn identity(dim: usize, level: usize) -> Result<Self> {
        let mut t = Self::zero(dim, level)?;
        t.levels[0][0] = 1.0;
        Ok(t)
    }

    /// Builds an element from explicit level arrays; `levels[n]` must have
    /// `dim^n` entries.
    pub fn from_levels(dim: usize, levels: Vec<Vec<f64>>) -> Result<Self> {
        ensure!(!levels.is_empty(), Shape, "at least level 0 is required");
        check_envelope(dim, (levels.len() - 1).max(1))?;
        for (n, arr) in levels.iter().enumerate() {
            ensure!(
                arr.len() == dim.pow(n as u32),
                Shape,
                "level {n} has {} entries, expected {}",
                arr.len(),
                dim.pow(n as u32)
            );
        }
        ensure!(
            levels.len() >= 2,
            Shape,
            "truncation level must be at least 1"
        );
        Ok(Self { dim, levels })
    }

    /// `exp(Δx)` truncated at level `p`: level `n` is `Δx^{⊗n}/n!`.
    ///
    /// This is the signature of the straight segment with increment `Δx`.
    pub fn segment_signature(delta: &[f64], level: usize) -> Result<Self> {
        let dim = delta.len();
        check_envelope(dim, level)?;
        let mut levels = Vec::with_capacity(level + 1);
        levels.push(vec![1.0]);
        for n in 1..=level {
            let prev: &Vec<f64> = &levels[n - 1];
            let mut next = outer(prev, delta);
            let inv = 1.0 / n as f64;
            next.iter_mut().for_each(|v| *v *= inv);
            levels.push(next);
        }
        Ok(Self { dim, levels })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Truncation level `p`.
    pub fn level(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn level_data(&self, n: usize) -> &[f64] {
        &self.levels[n]
    }

    pub fn level_data_mut(&mut self, n: usize) -> &mut [f64] {
        &mut self.levels[n]
    }

    pub fn levels(&self) -> &[Vec<f64>] {
        &self.levels
    }

    pub fn into_levels(self) -> Vec<Vec<f64>> {
        self.levels
    }

    /// Level-0 scalar.
    pub fn scalar(&self) -> f64 {
        self.levels[0][0]
    }

    /// True when the level-0 entry is 1 within `tol`.
    pub fn is_group_like(&self, tol: f64) -> bool {
        (self.scalar() - 1.0).abs() <= tol
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        ensure!(
            self.dim == other.dim && self.level() == other.level(),
            Shape,
            "tensor shapes differ: (d={}, p={}) vs (d={}, p={})",
            self.dim,
            self.level(),
            other.dim,
            other.level()
        );
        Ok(())
    }

    /// Truncated tensor product `self ⊗ other`.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        out.mul_assign(other)?;
        Ok(out)
    }

    /// In-place right multiplication `self ← self ⊗ other`.
    ///
    /// Levels are updated from the top down so the lower levels of `self` are
    /// still the old values when they are read.
    pub fn mul_assign(&mut self, other: &Self) -> Result<()> {
        self.check_compatible(other)?;
        let p = self.level();
        for n in (0..=p).rev() {
            let b0 = other.levels[0][0];
            let mut acc: Vec<f64> = self.levels[n].iter().map(|v| v * b0).collect();
            for k in 1..=n {
                let a = &self.levels[n - k];
                let b = &other.levels[k];
                let width = b.len();
                for (ai, &av) in a.iter().enumerate() {
                    if av == 0.0 {
                        continue;
                    }
                    let dst = &mut acc[ai * width..(ai + 1) * width];
                    for (d, &bv) in dst.iter_mut().zip(b) {
                        *d += av * bv;
                    }
                }
            }
            self.levels[n] = acc;
        }
        Ok(())
    }

    /// Entrywise difference.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let levels = self
            .levels
            .iter()
            .zip(&other.levels)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
            .collect();
        Ok(Self {
            dim: self.dim,
            levels,
        })
    }

    /// Largest absolute entry over all levels.
    pub fn max_abs(&self) -> f64 {
        self.levels.iter().map(|l| max_abs(l)).fold(0.0, f64::max)
    }

    /// Average of level `n` over all permutations of its `n` indices.
    pub fn symmetrize(&self, n: usize) -> Result<Vec<f64>> {
        ensure!(
            (1..=self.level()).contains(&n),
            InvalidArgument,
            "level {n} outside 1..={}",
            self.level()
        );
        Ok(symmetrize_level(self.dim, n, &self.levels[n]))
    }
}

/// Symmetrization of a rank-`n` array.
///
/// Every permutation of a multi-index `I` appears equally often among the
/// `n!` rearrangements, so the symmetrized entry is the plain mean over the
/// distinct rearrangements of `I`, i.e. over the multiset orbit.
pub fn symmetrize_level(dim: usize, n: usize, data: &[f64]) -> Vec<f64> {
    let keys: Vec<usize> = (0..data.len())
        .map(|flat| {
            let mut d = digits_of(dim, n, flat);
            d.sort_unstable();
            flat_index(dim, &d)
        })
        .collect();
    let mut sums = vec![0.0; data.len()];
    let mut counts = vec![0usize; data.len()];
    for (flat, &key) in keys.iter().enumerate() {
        sums[key] += data[flat];
        counts[key] += 1;
    }
    keys.iter()
        .map(|&key| sums[key] / counts[key] as f64)
        .collect()
}

/// Brute-force symmetrization by enumerating all `n!` permutations. Slow;
/// kept for cross-checking [`symmetrize_level`].
pub fn symmetrize_level_by_permutations(dim: usize, n: usize, data: &[f64]) -> Vec<f64> {
    let perms: Vec<Vec<usize>> = (0..n).permutations(n).collect();
    let scale = 1.0 / perms.len() as f64;
    (0..data.len())
        .map(|flat| {
            let digits = digits_of(dim, n, flat);
            let total: f64 = perms
                .iter()
                .map(|perm| {
                    let permuted: Vec<usize> = perm.iter().map(|&j| digits[j]).collect();
                    data[flat_index(dim, &permuted)]
                })
                .sum();
            total * scale
        })
        .collect()
}

impl std::fmt::Display for TruncatedTensor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "T(d={}, p={}):", self.dim, self.level())?;
        for (n, l) in self.levels.iter().enumerate() {
            write!(f, " [{n}]{l:?}")?;
        }
        Ok(())
    }
}

impl From<TruncatedTensor> for Vec<Vec<f64>> {
    fn from(t: TruncatedTensor) -> Self {
        t.levels
    }
}

impl TryFrom<(usize, Vec<Vec<f64>>)> for TruncatedTensor {
    type Error = Error;

    fn try_from((dim, levels): (usize, Vec<Vec<f64>>)) -> Result<Self> {
        Self::from_levels(dim, levels)
    }
}
