//! Volterra kernel of fBm for `H < 1/2`:
//!
//! `K(t,s) = c [ (t/s)^{H−½}(t−s)^{H−½} − (H−½) s^{½−H} ∫_s^t u^{H−3/2}(u−s)^{H−½} du ]`,
//!
//! with the inner integral in closed form through the incomplete beta
//! function. The constant `c` is fixed by requiring `∫_0^T K(T,u)² du = T^{2H}`.

use statrs::function::beta::{beta, beta_reg};

use crate::error::{ensure, Result};
use crate::quadrature::GaussLegendre;

/// Gauss–Legendre points per panel of the graded rule.
const PANEL_ORDER: usize = 16;

#[derive(Debug, Clone)]
pub struct VolterraKernel {
    hurst: f64,
    constant: f64,
    nodes: usize,
    rule: GaussLegendre,
    beta_ab: f64,
}

impl VolterraKernel {
    /// Kernel normalized at the calibration time `horizon` with `nodes`
    /// graded quadrature points per integral.
    pub fn new(hurst: f64, horizon: f64, nodes: usize) -> Result<Self> {
        ensure!(
            hurst > 0.0 && hurst < 0.5,
            InvalidArgument,
            "the kernel form needs H in (0, 1/2), got {hurst}"
        );
        ensure!(
            horizon > 0.0,
            InvalidArgument,
            "calibration time must be positive"
        );
        ensure!(
            nodes >= 2 * PANEL_ORDER && nodes.is_multiple_of(2 * PANEL_ORDER),
            InvalidArgument,
            "node count must be a positive multiple of {}, got {nodes}",
            2 * PANEL_ORDER
        );
        let mut k = Self {
            hurst,
            constant: 1.0,
            nodes,
            rule: GaussLegendre::new(PANEL_ORDER),
            beta_ab: beta(1.0 - 2.0 * hurst, hurst + 0.5),
        };
        let raw = k.product_integral(horizon, horizon);
        ensure!(
            raw.is_finite() && raw > 0.0,
            NonConvergence,
            "kernel calibration integral is {raw}"
        );
        k.constant = (horizon.powf(2.0 * hurst) / raw).sqrt();
        Ok(k)
    }

    pub fn hurst(&self) -> f64 {
        self.hurst
    }

    /// The calibrated constant `c`.
    pub fn constant(&self) -> f64 {
        self.constant
    }

    /// `√(2H / ((1−2H) B(1−2H, H+½)))`, the textbook value of `c`.
    pub fn reference_constant(&self) -> f64 {
        let h = self.hurst;
        (2.0 * h / ((1.0 - 2.0 * h) * self.beta_ab)).sqrt()
    }

    /// `K(t, s)` for `0 < s < t`; zero for `s ≥ t`.
    pub fn eval(&self, t: f64, s: f64) -> f64 {
        if s >= t || s <= 0.0 {
            return 0.0;
        }
        let h = self.hurst;
        let e = h - 0.5;
        let (a, b) = (1.0 - 2.0 * h, h + 0.5);
        // 1 − I_x(a, b) = I_{1−x}(b, a), better conditioned near x = 1.
        let tail = beta_reg(b, a, 1.0 - s / t);
        let first = (t / s).powf(e) * (t - s).powf(e);
        let second = e * s.powf(e) * self.beta_ab * tail;
        self.constant * (first - second)
    }

    /// `∫_0^{t∧s} K(t,u) K(s,u) du` with the kernel's current constant.
    fn product_integral(&self, t: f64, s: f64) -> f64 {
        let m = t.min(s);
        if m <= 0.0 {
            return 0.0;
        }
        let h = self.hurst;
        let f = |u: f64| self.eval(t, u) * self.eval(s, u);
        let panels = self.nodes / (2 * PANEL_ORDER);
        let half = 0.5 * m;
        // Left half: u = half·w^a removes the u^{2H−1} singularity.
        let a = 1.0 / (2.0 * h);
        let left = self.rule.composite(
            |w| f(half * w.powf(a)) * half * a * w.powf(a - 1.0),
            0.0,
            1.0,
            panels,
        );
        // Right half: u = m − half·w^b removes (m−u)^e with e = 2H−1 on the
        // diagonal and e = H−½ off it.
        let e = if (t - s).abs() <= 1e-14 * m {
            2.0 * h - 1.0
        } else {
            h - 0.5
        };
        let b = 1.0 / (e + 1.0);
        let right = self.rule.composite(
            |w| f(m - half * w.powf(b)) * half * b * w.powf(b - 1.0),
            0.0,
            1.0,
            panels,
        );
        left + right
    }
}

/// Quadrature value of `∫_0^{t∧s} K(t,u) K(s,u) du`, which should equal
/// `R_H(t, s)`.
pub fn kernel_covariance_check(kernel: &VolterraKernel, t: f64, s: f64) -> Result<f64> {
    ensure!(
        t >= 0.0 && s >= 0.0,
        InvalidArgument,
        "times must be nonnegative, got ({t}, {s})"
    );
    let v = kernel.product_integral(t, s);
    ensure!(
        v.is_finite(),
        NonConvergence,
        "kernel quadrature at ({t}, {s}) is {v}"
    );
    Ok(v)
}
