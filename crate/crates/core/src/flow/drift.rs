//! Drift fields `b(t, x)` and the preset family used by the experiments.

use std::f64::consts::SQRT_2;

use statrs::function::erf::erfc;

use crate::error::{ensure, Result};

/// A drift `b : [0,T] × R^d → R^d` with declared bounds.
pub trait Drift: Sync + Send {
    fn dim(&self) -> usize;

    fn eval(&self, t: f64, x: &[f64], out: &mut [f64]);

    /// Declared `‖b‖_∞` (may be infinite for unbounded presets).
    fn sup_bound(&self) -> f64;

    /// Declared `sup_t ‖b(t,·)‖_{L¹}` (infinite when not integrable).
    fn l1_bound(&self) -> f64;

    /// Declared Lipschitz constant in `x`, if the drift is smooth.
    fn lipschitz(&self) -> Option<f64> {
        None
    }

    fn name(&self) -> String;
}

impl<D: Drift + ?Sized> Drift for Box<D> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, t: f64, x: &[f64], out: &mut [f64]) {
        (**self).eval(t, x, out)
    }
    fn sup_bound(&self) -> f64 {
        (**self).sup_bound()
    }
    fn l1_bound(&self) -> f64 {
        (**self).l1_bound()
    }
    fn lipschitz(&self) -> Option<f64> {
        (**self).lipschitz()
    }
    fn name(&self) -> String {
        (**self).name()
    }
}

/// Standard normal distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

#[derive(Debug, Clone)]
pub struct ZeroDrift {
    pub dim: usize,
}

impl Drift for ZeroDrift {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, _: f64, _: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
    fn sup_bound(&self) -> f64 {
        0.0
    }
    fn l1_bound(&self) -> f64 {
        0.0
    }
    fn lipschitz(&self) -> Option<f64> {
        Some(0.0)
    }
    fn name(&self) -> String {
        "zero".into()
    }
}

#[derive(Debug, Clone)]
pub struct ConstantDrift {
    pub value: Vec<f64>,
}

impl Drift for ConstantDrift {
    fn dim(&self) -> usize {
        self.value.len()
    }
    fn eval(&self, _: f64, _: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.value);
    }
    fn sup_bound(&self) -> f64 {
        self.value.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
    fn l1_bound(&self) -> f64 {
        if self.value.iter().all(|v| *v == 0.0) {
            0.0
        } else {
            f64::INFINITY
        }
    }
    fn lipschitz(&self) -> Option<f64> {
        Some(0.0)
    }
    fn name(&self) -> String {
        "constant".into()
    }
}

/// `b(t, x) = a·x`.
#[derive(Debug, Clone)]
pub struct LinearDrift {
    pub dim: usize,
    pub rate: f64,
}

impl Drift for LinearDrift {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, _: f64, x: &[f64], out: &mut [f64]) {
        for (o, v) in out.iter_mut().zip(x) {
            *o = self.rate * v;
        }
    }
    fn sup_bound(&self) -> f64 {
        if self.rate == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
    fn l1_bound(&self) -> f64 {
        self.sup_bound()
    }
    fn lipschitz(&self) -> Option<f64> {
        Some(self.rate.abs())
    }
    fn name(&self) -> String {
        "linear".into()
    }
}

/// `b_i(t, x) = a·sin(x_i)`.
#[derive(Debug, Clone)]
pub struct SineDrift {
    pub dim: usize,
    pub amplitude: f64,
}

impl Drift for SineDrift {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, _: f64, x: &[f64], out: &mut [f64]) {
        for (o, v) in out.iter_mut().zip(x) {
            *o = self.amplitude * v.sin();
        }
    }
    fn sup_bound(&self) -> f64 {
        self.amplitude.abs() * (self.dim as f64).sqrt()
    }
    fn l1_bound(&self) -> f64 {
        f64::INFINITY
    }
    fn lipschitz(&self) -> Option<f64> {
        Some(self.amplitude.abs())
    }
    fn name(&self) -> String {
        "sine".into()
    }
}

/// `b_i(x) = sign(x_i)·∏_j 1{|x_j| ≤ 1}`: bounded, integrable, discontinuous.
#[derive(Debug, Clone)]
pub struct SignCutoffDrift {
    pub dim: usize,
}

impl Drift for SignCutoffDrift {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, _: f64, x: &[f64], out: &mut [f64]) {
        let inside = x.iter().all(|v| v.abs() <= 1.0);
        for (o, v) in out.iter_mut().zip(x) {
            *o = if inside && *v != 0.0 { v.signum() } else { 0.0 };
        }
    }
    fn sup_bound(&self) -> f64 {
        (self.dim as f64).sqrt()
    }
    fn l1_bound(&self) -> f64 {
        (self.dim as f64).sqrt() * 2f64.powi(self.dim as i32)
    }
    fn name(&self) -> String {
        "sign-cutoff".into()
    }
}

/// The sign-cutoff drift convolved with the Gaussian density of standard
/// deviation `ε`, in closed form: with `Φ` the normal distribution function,
/// `g(x) = 2Φ(x/ε) − Φ((x−1)/ε) − Φ((x+1)/ε)` and
/// `c(x) = Φ((x+1)/ε) − Φ((x−1)/ε)`, `b_i = g(x_i) ∏_{j≠i} c(x_j)`.
#[derive(Debug, Clone)]
pub struct MollifiedSignCutoff {
    pub dim: usize,
    pub eps: f64,
}

impl MollifiedSignCutoff {
    pub fn new(dim: usize, eps: f64) -> Result<Self> {
        ensure!(
            eps > 0.0,
            InvalidArgument,
            "mollification scale must be positive, got {eps}"
        );
        ensure!(dim >= 1, InvalidArgument, "dimension must be positive");
        Ok(Self { dim, eps })
    }

    fn odd(&self, x: f64) -> f64 {
        let e = self.eps;
        2.0 * normal_cdf(x / e) - normal_cdf((x - 1.0) / e) - normal_cdf((x + 1.0) / e)
    }

    fn window(&self, x: f64) -> f64 {
        let e = self.eps;
        normal_cdf((x + 1.0) / e) - normal_cdf((x - 1.0) / e)
    }
}

impl Drift for MollifiedSignCutoff {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, _: f64, x: &[f64], out: &mut [f64]) {
        for i in 0..self.dim {
            let mut v = self.odd(x[i]);
            for (j, xj) in x.iter().enumerate() {
                if j != i {
                    v *= self.window(*xj);
                }
            }
            out[i] = v;
        }
    }
    fn sup_bound(&self) -> f64 {
        (self.dim as f64).sqrt()
    }
    fn l1_bound(&self) -> f64 {
        (self.dim as f64).sqrt() * 2f64.powi(self.dim as i32)
    }
    fn lipschitz(&self) -> Option<f64> {
        // |g'| ≤ 2·2ρ_ε(0) and |c'| ≤ 2ρ_ε(0).
        let peak = 1.0 / (self.eps * (2.0 * std::f64::consts::PI).sqrt());
        Some(4.0 * peak * self.dim as f64)
    }
    fn name(&self) -> String {
        format!("sign-cutoff mollified at {}", self.eps)
    }
}

/// `b + c` for a constant vector `c`.
pub struct ShiftedDrift<D> {
    pub inner: D,
    pub shift: Vec<f64>,
}

impl<D: Drift> Drift for ShiftedDrift<D> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn eval(&self, t: f64, x: &[f64], out: &mut [f64]) {
        self.inner.eval(t, x, out);
        for (o, c) in out.iter_mut().zip(&self.shift) {
            *o += c;
        }
    }
    fn sup_bound(&self) -> f64 {
        self.inner.sup_bound() + self.shift.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
    fn l1_bound(&self) -> f64 {
        if self.shift.iter().all(|v| *v == 0.0) {
            self.inner.l1_bound()
        } else {
            f64::INFINITY
        }
    }
    fn lipschitz(&self) -> Option<f64> {
        self.inner.lipschitz()
    }
    fn name(&self) -> String {
        format!("{} shifted", self.inner.name())
    }
}

/// A drift given by a closure.
pub struct FnDrift<F> {
    dim: usize,
    f: F,
    sup: f64,
    l1: f64,
    lipschitz: Option<f64>,
    name: String,
}

impl<F> FnDrift<F>
where
    F: Fn(f64, &[f64], &mut [f64]) + Sync + Send,
{
    pub fn new(name: &str, dim: usize, f: F, sup: f64, l1: f64, lipschitz: Option<f64>) -> Self {
        Self {
            dim,
            f,
            sup,
            l1,
            lipschitz,
            name: name.into(),
        }
    }
}

impl<F> Drift for FnDrift<F>
where
    F: Fn(f64, &[f64], &mut [f64]) + Sync + Send,
{
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, t: f64, x: &[f64], out: &mut [f64]) {
        (self.f)(t, x, out)
    }
    fn sup_bound(&self) -> f64 {
        self.sup
    }
    fn l1_bound(&self) -> f64 {
        self.l1
    }
    fn lipschitz(&self) -> Option<f64> {
        self.lipschitz
    }
    fn name(&self) -> String {
        self.name.clone()
    }
}

/// One-dimensional mollification of a bounded function supported in
/// `[lo, hi]`, tabulated once and evaluated by cubic Hermite interpolation.
///
/// The function is sampled at cell midpoints of a fine grid and each cell is
/// convolved exactly with the Gaussian, so discontinuities placed on cell
/// edges are reproduced without smearing beyond the mollifier itself.
#[derive(Debug, Clone)]
pub struct TabulatedMollifier {
    start: f64,
    spacing: f64,
    values: Vec<f64>,
    sup: f64,
    l1: f64,
}

impl TabulatedMollifier {
    pub fn new<F: Fn(f64) -> f64>(b: F, lo: f64, hi: f64, eps: f64, cells: usize) -> Result<Self> {
        ensure!(hi > lo, InvalidArgument, "support [{lo}, {hi}] is empty");
        ensure!(
            eps > 0.0,
            InvalidArgument,
            "mollification scale must be positive"
        );
        ensure!(cells >= 2, InvalidArgument, "need at least two cells");
        let dy = (hi - lo) / cells as f64;
        let mids: Vec<f64> = (0..cells).map(|k| b(lo + (k as f64 + 0.5) * dy)).collect();
        let sup = mids.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let l1 = mids.iter().map(|v| v.abs() * dy).sum();
        let reach = 9.0 * eps;
        let start = lo - reach;
        let points = (((hi - lo) + 2.0 * reach) / dy).ceil() as usize + 1;
        let values = (0..points)
            .map(|j| {
                let x = start + j as f64 * dy;
                mids.iter()
                    .enumerate()
                    .map(|(k, v)| {
                        let (a, c) = (lo + k as f64 * dy, lo + (k + 1) as f64 * dy);
                        v * (normal_cdf((x - a) / eps) - normal_cdf((x - c) / eps))
                    })
                    .sum()
            })
            .collect();
        Ok(Self {
            start,
            spacing: dy,
            values,
            sup,
            l1,
        })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let u = (x - self.start) / self.spacing;
        let n = self.values.len();
        if u <= 0.0 || u >= (n - 1) as f64 {
            return 0.0;
        }
        let j = u.floor() as usize;
        let th = u - j as f64;
        let at = |i: isize| -> f64 {
            if i < 0 || i as usize >= n {
                0.0
            } else {
                self.values[i as usize]
            }
        };
        let j = j as isize;
        let (p0, p1, p2, p3) = (at(j - 1), at(j), at(j + 1), at(j + 2));
        let (m1, m2) = (0.5 * (p2 - p0), 0.5 * (p3 - p1));
        let (t2, t3) = (th * th, th * th * th);
        (2.0 * t3 - 3.0 * t2 + 1.0) * p1
            + (t3 - 2.0 * t2 + th) * m1
            + (-2.0 * t3 + 3.0 * t2) * p2
            + (t3 - t2) * m2
    }
}

impl Drift for TabulatedMollifier {
    fn dim(&self) -> usize {
        1
    }
    fn eval(&self, _: f64, x: &[f64], out: &mut [f64]) {
        out[0] = TabulatedMollifier::eval(self, x[0]);
    }
    fn sup_bound(&self) -> f64 {
        self.sup
    }
    fn l1_bound(&self) -> f64 {
        self.l1
    }
    fn name(&self) -> String {
        "tabulated mollification".into()
    }
}

/// Named presets: `zero`, `constant`, `linear`, `sine`, `sign-cutoff`.
pub fn preset(name: &str, dim: usize) -> Result<Box<dyn Drift>> {
    ensure!(dim >= 1, InvalidArgument, "dimension must be positive");
    Ok(match name {
        "zero" => Box::new(ZeroDrift { dim }),
        "constant" => Box::new(ConstantDrift {
            value: vec![0.5; dim],
        }),
        "linear" => Box::new(LinearDrift { dim, rate: -1.0 }),
        "sine" => Box::new(SineDrift {
            dim,
            amplitude: 1.0,
        }),
        "sign-cutoff" => Box::new(SignCutoffDrift { dim }),
        other => return Err(crate::Error::Config(format!(
            "unknown drift preset '{other}' (expected zero, constant, linear, sine or sign-cutoff)"
        ))),
    })
}

/// `b_ε` for a preset: the closed-form Gaussian mollification of
/// `sign-cutoff`, and the preset itself when it is already smooth.
pub fn mollified_drift(name: &str, dim: usize, eps: f64) -> Result<Box<dyn Drift>> {
    ensure!(
        eps > 0.0,
        InvalidArgument,
        "mollification scale must be positive, got {eps}"
    );
    match name {
        "sign-cutoff" => Ok(Box::new(MollifiedSignCutoff::new(dim, eps)?)),
        other => preset(other, dim),
    }
}
