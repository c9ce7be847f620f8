//! Smooth functions together with their derivative tensors.
//!
//! `D^n f(x)` is stored row-major with the `n` derivative indices first and
//! the value indices last, so a rank-`r` function has `d^{n+r}` entries at
//! order `n`.

use std::fmt::Debug;
use std::sync::Arc;

use crate::error::{ensure, Result};
use crate::tensor;

pub trait SmoothFunctionStack: Send + Sync {
    /// Input dimension `d`.
    fn dim(&self) -> usize;

    /// 0 for scalar functions, 1 for `R^d`-valued ones.
    fn value_rank(&self) -> usize;

    /// Highest derivative order available.
    fn max_order(&self) -> usize;

    /// Writes `D^order f(x)` into `out` (length `d^{order + rank}`).
    fn derivative(&self, order: usize, x: &[f64], out: &mut [f64]);

    fn derivative_vec(&self, order: usize, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim().pow((order + self.value_rank()) as u32)];
        self.derivative(order, x, &mut out);
        out
    }

    fn value(&self, x: &[f64]) -> Vec<f64> {
        self.derivative_vec(0, x)
    }
}

impl<S: SmoothFunctionStack + ?Sized> SmoothFunctionStack for Arc<S> {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn value_rank(&self) -> usize {
        (**self).value_rank()
    }

    fn max_order(&self) -> usize {
        (**self).max_order()
    }

    fn derivative(&self, order: usize, x: &[f64], out: &mut [f64]) {
        (**self).derivative(order, x, out)
    }
}

/// A scalar function of one variable with all derivatives available.
pub trait Factor: Send + Sync + Debug {
    /// Writes `f(x), f'(x), …, f^(n)(x)` into `out[0..=n]`.
    fn derivatives(&self, x: f64, out: &mut [f64]);
}

/// `Σ_k c_k x^k`.
#[derive(Debug, Clone)]
pub struct Polynomial {
    pub coeffs: Vec<f64>,
}

impl Factor for Polynomial {
    fn derivatives(&self, x: f64, out: &mut [f64]) {
        let mut c = self.coeffs.clone();
        for slot in out.iter_mut() {
            *slot = c.iter().rev().fold(0.0, |acc, v| acc * x + v);
            c = c
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, v)| k as f64 * v)
                .collect();
        }
    }
}

/// `exp(−(x−c)²/(2w²))`, derivatives through Hermite polynomials.
#[derive(Debug, Clone)]
pub struct Gaussian {
    pub center: f64,
    pub width: f64,
}

impl Factor for Gaussian {
    fn derivatives(&self, x: f64, out: &mut [f64]) {
        let z = (x - self.center) / self.width;
        let g = (-0.5 * z * z).exp();
        // f^(n) = (−1/w)^n He_n(z) g, with He_{n+1} = z He_n − n He_{n−1}.
        let (mut h0, mut h1) = (1.0, z);
        let mut scale = 1.0;
        for (n, slot) in out.iter_mut().enumerate() {
            let he = if n == 0 { h0 } else { h1 };
            *slot = scale * he * g;
            if n >= 1 {
                let next = z * h1 - n as f64 * h0;
                h0 = h1;
                h1 = next;
            }
            scale *= -1.0 / self.width;
        }
    }
}

/// `a·sin(kx + φ)`.
#[derive(Debug, Clone)]
pub struct Sine {
    pub amplitude: f64,
    pub frequency: f64,
    pub phase: f64,
}

impl Factor for Sine {
    fn derivatives(&self, x: f64, out: &mut [f64]) {
        let arg = self.frequency * x + self.phase;
        let mut scale = self.amplitude;
        for (n, slot) in out.iter_mut().enumerate() {
            *slot = scale * (arg + n as f64 * std::f64::consts::FRAC_PI_2).sin();
            scale *= self.frequency;
        }
    }
}

/// Even cutoff equal to 1 on `[−inner, inner]` and 0 outside
/// `[−outer, outer]`, joined by the degree-17 smoothstep (class `C^8`).
#[derive(Debug, Clone)]
pub struct Plateau {
    inner: f64,
    outer: f64,
    /// Coefficients of the smoothstep `S(u)` in powers of `u`.
    step: Vec<f64>,
}

impl Plateau {
    pub const SMOOTHNESS: usize = 8;

    pub fn new(inner: f64, outer: f64) -> Result<Self> {
        ensure!(
            inner >= 0.0 && outer > inner,
            InvalidArgument,
            "plateau needs 0 <= inner < outer"
        );
        let n = Self::SMOOTHNESS;
        let binom = |a: usize, b: usize| -> f64 {
            (0..b).fold(1.0, |acc, i| acc * (a - i) as f64 / (i + 1) as f64)
        };
        let mut step = vec![0.0; 2 * n + 2];
        for k in 0..=n {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            step[n + 1 + k] = sign * binom(n + k, k) * binom(2 * n + 1, n - k);
        }
        Ok(Self { inner, outer, step })
    }
}

impl Factor for Plateau {
    fn derivatives(&self, x: f64, out: &mut [f64]) {
        out.fill(0.0);
        let a = x.abs();
        if a <= self.inner {
            out[0] = 1.0;
            return;
        }
        if a >= self.outer {
            return;
        }
        let w = self.outer - self.inner;
        let u = (self.outer - a) / w;
        // d/dx = −sign(x)/w · d/du.
        let chain = -x.signum() / w;
        let step = Polynomial {
            coeffs: self.step.clone(),
        };
        if u <= 0.5 {
            step.derivatives(u, out);
        } else {
            // S(u) = 1 − S(1 − u) keeps the expansion near its flat end.
            step.derivatives(1.0 - u, out);
            out[0] = 1.0 - out[0];
            for (k, slot) in out.iter_mut().enumerate().skip(1) {
                if k % 2 == 0 {
                    *slot = -*slot;
                }
            }
        }
        let mut scale = 1.0;
        for slot in out.iter_mut() {
            *slot *= scale;
            scale *= chain;
        }
    }
}

/// `f(x) = g(x_1)·g(x_2)⋯` style products of one-dimensional factors, one
/// list per coordinate (factors in the same list multiply).
#[derive(Debug, Clone)]
pub struct Separable {
    factors: Vec<Vec<Arc<dyn Factor>>>,
    max_order: usize,
}

impl Separable {
    pub fn new(factors: Vec<Vec<Arc<dyn Factor>>>, max_order: usize) -> Result<Self> {
        ensure!(
            !factors.is_empty(),
            InvalidArgument,
            "need at least one coordinate"
        );
        Ok(Self { factors, max_order })
    }

    /// The same factor list on every coordinate.
    pub fn isotropic(dim: usize, factors: Vec<Arc<dyn Factor>>, max_order: usize) -> Result<Self> {
        Self::new(vec![factors; dim], max_order)
    }

    /// Derivatives `0..=n` of coordinate `j`'s product of factors (Leibniz).
    fn coordinate_derivatives(&self, j: usize, x: f64, n: usize) -> Vec<f64> {
        let mut acc = vec![0.0; n + 1];
        acc[0] = 1.0;
        let mut buf = vec![0.0; n + 1];
        for f in &self.factors[j] {
            f.derivatives(x, &mut buf);
            let mut next = vec![0.0; n + 1];
            for (m, slot) in next.iter_mut().enumerate() {
                let mut binom = 1.0;
                for i in 0..=m {
                    *slot += binom * acc[i] * buf[m - i];
                    binom = binom * (m - i) as f64 / (i + 1) as f64;
                }
            }
            acc = next;
        }
        acc
    }
}

impl SmoothFunctionStack for Separable {
    fn dim(&self) -> usize {
        self.factors.len()
    }

    fn value_rank(&self) -> usize {
        0
    }

    fn max_order(&self) -> usize {
        self.max_order
    }

    fn derivative(&self, order: usize, x: &[f64], out: &mut [f64]) {
        let d = self.dim();
        let tables: Vec<Vec<f64>> = (0..d)
            .map(|j| self.coordinate_derivatives(j, x[j], order))
            .collect();
        let mut counts = vec![0usize; d];
        for (flat, slot) in out.iter_mut().enumerate() {
            counts.fill(0);
            let mut rest = flat;
            for _ in 0..order {
                counts[rest % d] += 1;
                rest /= d;
            }
            *slot = (0..d).map(|j| tables[j][counts[j]]).product();
        }
    }
}

/// `R^d`-valued function with scalar components; the value index is last.
pub struct Field {
    components: Vec<Arc<dyn SmoothFunctionStack>>,
}

impl Field {
    pub fn new(components: Vec<Arc<dyn SmoothFunctionStack>>) -> Result<Self> {
        let d = components.len();
        ensure!(d >= 1, InvalidArgument, "a field needs components");
        ensure!(
            components
                .iter()
                .all(|c| c.dim() == d && c.value_rank() == 0),
            Shape,
            "a field on R^{d} needs {d} scalar components of input dimension {d}"
        );
        Ok(Self { components })
    }
}

impl SmoothFunctionStack for Field {
    fn dim(&self) -> usize {
        self.components.len()
    }
    fn value_rank(&self) -> usize {
        1
    }
    fn max_order(&self) -> usize {
        self.components
            .iter()
            .map(|c| c.max_order())
            .min()
            .unwrap_or(0)
    }
    fn derivative(&self, order: usize, x: &[f64], out: &mut [f64]) {
        let d = self.dim();
        for (o, c) in self.components.iter().enumerate() {
            let v = c.derivative_vec(order, x);
            for (i, val) in v.into_iter().enumerate() {
                out[i * d + o] = val;
            }
        }
    }
}

/// `Df` of a scalar function, seen as an `R^d`-valued function.
pub struct Gradient<S> {
    pub inner: S,
}

impl<S: SmoothFunctionStack> SmoothFunctionStack for Gradient<S> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn value_rank(&self) -> usize {
        self.inner.value_rank() + 1
    }
    fn max_order(&self) -> usize {
        self.inner.max_order().saturating_sub(1)
    }
    fn derivative(&self, order: usize, x: &[f64], out: &mut [f64]) {
        self.inner.derivative(order + 1, x, out)
    }
}

/// `D^k f` seen as a function of higher value rank (derivative indices are
/// symmetric, so the split between derivative and value indices is free).
pub struct Shifted<'a> {
    pub inner: &'a dyn SmoothFunctionStack,
    pub shift: usize,
}

impl SmoothFunctionStack for Shifted<'_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn value_rank(&self) -> usize {
        self.inner.value_rank() + self.shift
    }
    fn max_order(&self) -> usize {
        self.inner.max_order().saturating_sub(self.shift)
    }
    fn derivative(&self, order: usize, x: &[f64], out: &mut [f64]) {
        self.inner.derivative(order + self.shift, x, out)
    }
}

/// `Σ_j c_j f_j`.
pub struct Sum {
    terms: Vec<(f64, Arc<dyn SmoothFunctionStack>)>,
}

impl Sum {
    pub fn new(terms: Vec<(f64, Arc<dyn SmoothFunctionStack>)>) -> Result<Self> {
        ensure!(!terms.is_empty(), InvalidArgument, "empty sum");
        let (d, r) = (terms[0].1.dim(), terms[0].1.value_rank());
        ensure!(
            terms
                .iter()
                .all(|(_, f)| f.dim() == d && f.value_rank() == r),
            Shape,
            "summands differ in shape"
        );
        Ok(Self { terms })
    }
}

impl SmoothFunctionStack for Sum {
    fn dim(&self) -> usize {
        self.terms[0].1.dim()
    }
    fn value_rank(&self) -> usize {
        self.terms[0].1.value_rank()
    }
    fn max_order(&self) -> usize {
        self.terms
            .iter()
            .map(|(_, f)| f.max_order())
            .min()
            .unwrap_or(0)
    }
    fn derivative(&self, order: usize, x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (c, f) in &self.terms {
            for (o, v) in out.iter_mut().zip(f.derivative_vec(order, x)) {
                *o += c * v;
            }
        }
    }
}

/// Largest deviation between `D^{n+1}f(x)·e_j` and the central difference
/// `(D^n f(x + h e_j) − D^n f(x − h e_j)) / 2h` over `j`.
pub fn finite_difference_defect(
    f: &dyn SmoothFunctionStack,
    order: usize,
    x: &[f64],
    h: f64,
) -> f64 {
    let d = f.dim();
    let exact = f.derivative_vec(order + 1, x);
    let block = exact.len() / d;
    let mut worst = 0.0_f64;
    for j in 0..d {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[j] += h;
        xm[j] -= h;
        let (p, m) = (f.derivative_vec(order, &xp), f.derivative_vec(order, &xm));
        for (i, (a, b)) in p.iter().zip(&m).enumerate() {
            let fd = (a - b) / (2.0 * h);
            worst = worst.max((fd - exact[j * block + i]).abs());
        }
    }
    worst
}

/// Test functions `gauss-bump-1`, `gauss-bump-2`, `gauss-bump-3`.
pub fn eta_preset(
    name: &str,
    dim: usize,
    max_order: usize,
) -> Result<Arc<dyn SmoothFunctionStack>> {
    ensure!(dim >= 1, InvalidArgument, "dimension must be positive");
    let bump = |c: f64, w: f64| -> Arc<dyn Factor> {
        Arc::new(Gaussian {
            center: c,
            width: w,
        })
    };
    let stack = match name {
        "gauss-bump-1" => Separable::isotropic(dim, vec![bump(0.0, 0.6)], max_order)?,
        "gauss-bump-2" => Separable::isotropic(
            dim,
            vec![
                bump(0.3, 0.45),
                Arc::new(Polynomial {
                    coeffs: vec![1.0, 0.5, -0.3],
                }),
            ],
            max_order,
        )?,
        "gauss-bump-3" => Separable::isotropic(
            dim,
            vec![bump(-0.2, 0.8), Arc::new(Plateau::new(1.0, 2.5)?)],
            max_order.min(Plateau::SMOOTHNESS),
        )?,
        other => return Err(crate::Error::Config(format!(
            "unknown test function '{other}' (expected gauss-bump-1, gauss-bump-2 or gauss-bump-3)"
        ))),
    };
    Ok(Arc::new(stack))
}

/// Full contraction of the first `k` indices of `a` against `v^{⊗k}`.
pub fn apply_power(a: &[f64], v: &[f64], k: usize) -> Vec<f64> {
    let mut out = a.to_vec();
    for _ in 0..k {
        out = tensor::contract_leading(&out, v);
    }
    out
}
