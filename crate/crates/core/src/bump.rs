//! The mollifier `ψ` and the radial cutoff `η`.
//!
//! `ψ(x) = C·exp(−1/(1 − s²))`, `s = |x − x₀|/R`, normalized so `∫ψ = 1`.
//!
//! `η` is a slope-2 ramp on `[1.25, 1.75]` mollified by a 1D bump of radius
//! 0.25. Writing `Φ` for the bump's distribution function and `Ψ` for its
//! antiderivative, `η(t) = 2[Ψ(t − 1.25) − Ψ(t − 1.75)]` and
//! `η′(t) = 2[Φ(t − 1.25) − Φ(t − 1.75)]`. Hence `η = 0` on `[0, 1]`, `η = 1` on
//! `[2, ∞)`, `0 ≤ η′ ≤ 2`.

use std::sync::OnceLock;

use crate::error::{BgkError, Result};
use crate::geometry::Ball;
use crate::point::Point;
use crate::quadrature::{gauss_legendre, integrate_1d, sphere_area, QuadConfig};

#[derive(Clone, Debug)]
pub struct Mollifier {
    pub support: Ball,
    /// `C` in `C·exp(−1/(1 − s²))`, including the `R^{−n}` scaling.
    pub normalization: f64,
    max_grad: f64,
}

/// `∫₀¹ exp(−1/(1 − s²)) s^{n−1} ds`.
fn radial_profile_moment(dim: usize) -> Result<f64> {
    let cfg = QuadConfig { rel_tol: 1e-14, abs_tol: 1e-300, max_subdivisions: 2000, ..QuadConfig::default() };
    let r = integrate_1d(
        |s: f64| {
            let q = 1.0 - s * s;
            if q > 0.0 {
                (-1.0 / q).exp() * s.powi(dim as i32 - 1)
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        &cfg,
    )?;
    Ok(r.value)
}

impl Mollifier {
    pub fn new(support: Ball) -> Result<Self> {
        let n = support.dim();
        if !(2..=3).contains(&n) {
            return Err(BgkError::UnsupportedDimension(n));
        }
        let moment = radial_profile_moment(n)?;
        let normalization = 1.0 / (support.radius.powi(n as i32) * sphere_area(n) * moment);

        // |∇ψ| = C·e^{−1/(1−s²)}·2s/(R(1−s²)²); maximize over s by a dense scan
        // refined with golden-section search.
        let g = |s: f64| {
            let q = 1.0 - s * s;
            if q <= 0.0 {
                0.0
            } else {
                (-1.0 / q).exp() * 2.0 * s / (q * q)
            }
        };
        let m = 20_000;
        let (mut best_s, mut best) = (0.0, 0.0);
        for k in 0..m {
            let s = k as f64 / m as f64;
            if g(s) > best {
                best = g(s);
                best_s = s;
            }
        }
        let (mut a, mut b) = ((best_s - 1.0 / m as f64).max(0.0), (best_s + 1.0 / m as f64).min(1.0));
        let phi = 0.5 * (5.0_f64.sqrt() - 1.0);
        for _ in 0..80 {
            let c = b - phi * (b - a);
            let d = a + phi * (b - a);
            if g(c) > g(d) {
                b = d;
            } else {
                a = c;
            }
        }
        let max_grad = g(0.5 * (a + b)).max(best) * normalization / support.radius;
        Ok(Self { support, normalization, max_grad })
    }

    pub fn dim(&self) -> usize {
        self.support.dim()
    }

    #[inline]
    pub fn eval(&self, x: &Point) -> f64 {
        let v = *x - self.support.center;
        let s2 = v.norm_sq() / (self.support.radius * self.support.radius);
        if s2 < 1.0 {
            self.normalization * (-1.0 / (1.0 - s2)).exp()
        } else {
            0.0
        }
    }

    #[inline]
    pub fn grad(&self, x: &Point) -> Point {
        self.eval_with_grad(x).1
    }

    /// `(ψ(x), ∇ψ(x))` sharing the exponential.
    #[inline]
    pub fn eval_with_grad(&self, x: &Point) -> (f64, Point) {
        let v = *x - self.support.center;
        let r2 = self.support.radius * self.support.radius;
        let s2 = v.norm_sq() / r2;
        if s2 < 1.0 {
            let q = 1.0 - s2;
            let psi = self.normalization * (-1.0 / q).exp();
            (psi, v * (-2.0 * psi / (r2 * q * q)))
        } else {
            (0.0, Point::zeros(x.dim()))
        }
    }

    /// `max ψ = C/e`, attained at the center.
    pub fn max_value(&self) -> f64 {
        self.normalization * (-1.0_f64).exp()
    }

    /// `max |∇ψ|`.
    pub fn max_grad(&self) -> f64 {
        self.max_grad
    }

    /// The same profile on the ball `x ↦ (x − x0)/scale` of the support.
    pub fn scaled(&self, x0: &Point, scale: f64) -> Result<Self> {
        Self::new(self.support.scaled(x0, scale))
    }
}

pub fn psi_eval(m: &Mollifier, x: &Point) -> f64 {
    m.eval(x)
}

pub fn psi_grad(m: &Mollifier, x: &Point) -> Point {
    m.grad(x)
}

const BUMP_HALF_WIDTH: f64 = 0.25;
const TABLE_CELLS: usize = 4096;

/// Tabulated `φ`, `φ′`, `Φ`, `Ψ` of the normalized 1D bump on
/// `[−0.25, 0.25]`, interpolated by quintic Hermite polynomials.
struct BumpTable {
    h: f64,
    cell: f64,
    phi: Vec<f64>,
    dphi: Vec<f64>,
    cdf: Vec<f64>,
    icdf: Vec<f64>,
}

fn bump_raw(u: f64, h: f64) -> (f64, f64) {
    let t = u / h;
    let q = 1.0 - t * t;
    if q <= 0.0 {
        return (0.0, 0.0);
    }
    let f = (-1.0 / q).exp();
    (f, f * (-2.0 * t / (h * q * q)))
}

impl BumpTable {
    fn build() -> Self {
        let h = BUMP_HALF_WIDTH;
        let n = TABLE_CELLS;
        let cell = 2.0 * h / n as f64;
        let (gx, gw) = gauss_legendre(16);
        let mut phi = Vec::with_capacity(n + 1);
        let mut dphi = Vec::with_capacity(n + 1);
        let mut cdf = Vec::with_capacity(n + 1);
        let mut icdf = Vec::with_capacity(n + 1);
        let (mut c, mut ic) = (0.0, 0.0);
        for k in 0..=n {
            let u = -h + k as f64 * cell;
            if k > 0 {
                let a = u - cell;
                // ∫_a^u φ and ∫_a^u (u − w) φ(w) dw on one cell.
                let (mut m0, mut m1) = (0.0, 0.0);
                for (x, w) in gx.iter().zip(&gw) {
                    let s = a + 0.5 * cell * (x + 1.0);
                    let f = bump_raw(s, h).0 * 0.5 * cell * w;
                    m0 += f;
                    m1 += (u - s) * f;
                }
                ic += cell * c + m1;
                c += m0;
            }
            let (f, df) = bump_raw(u, h);
            phi.push(f);
            dphi.push(df);
            cdf.push(c);
            icdf.push(ic);
        }
        let z = c;
        for v in phi.iter_mut().chain(dphi.iter_mut()).chain(cdf.iter_mut()).chain(icdf.iter_mut()) {
            *v /= z;
        }
        Self { h, cell, phi, dphi, cdf, icdf }
    }

    fn locate(&self, u: f64) -> (usize, f64) {
        let x = (u + self.h) / self.cell;
        let k = (x.floor() as usize).min(self.phi.len() - 2);
        (k, x - k as f64)
    }

    fn hermite(t: f64, f: [f64; 2], d: [f64; 2], s: [f64; 2], width: f64) -> f64 {
        let t2 = t * t;
        let t3 = t2 * t;
        let t4 = t3 * t;
        let t5 = t4 * t;
        let h00 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5;
        let h01 = 10.0 * t3 - 15.0 * t4 + 6.0 * t5;
        let h10 = t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5;
        let h11 = -4.0 * t3 + 7.0 * t4 - 3.0 * t5;
        let h20 = 0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5);
        let h21 = 0.5 * (t3 - 2.0 * t4 + t5);
        f[0] * h00 + f[1] * h01 + width * (d[0] * h10 + d[1] * h11) + width * width * (s[0] * h20 + s[1] * h21)
    }

    /// Distribution function `Φ(u) = ∫_{−h}^{u} φ`.
    fn cdf(&self, u: f64) -> f64 {
        if u <= -self.h {
            return 0.0;
        }
        if u >= self.h {
            return 1.0;
        }
        let (k, t) = self.locate(u);
        let v = Self::hermite(
            t,
            [self.cdf[k], self.cdf[k + 1]],
            [self.phi[k], self.phi[k + 1]],
            [self.dphi[k], self.dphi[k + 1]],
            self.cell,
        );
        v.clamp(0.0, 1.0)
    }

    /// `Ψ(u) = ∫_{−h}^{u} Φ`.
    fn integrated_cdf(&self, u: f64) -> f64 {
        if u <= -self.h {
            return 0.0;
        }
        if u >= self.h {
            return self.icdf[self.icdf.len() - 1] + (u - self.h);
        }
        let (k, t) = self.locate(u);
        let v = Self::hermite(
            t,
            [self.icdf[k], self.icdf[k + 1]],
            [self.cdf[k], self.cdf[k + 1]],
            [self.phi[k], self.phi[k + 1]],
            self.cell,
        );
        v.max(0.0)
    }
}

fn table() -> &'static BumpTable {
    static TABLE: OnceLock<BumpTable> = OnceLock::new();
    TABLE.get_or_init(BumpTable::build)
}

/// `η(t)` for `t ≥ 0` without argument checking.
#[inline]
pub fn eta(t: f64) -> f64 {
    if t <= 1.0 {
        0.0
    } else if t >= 2.0 {
        1.0
    } else {
        let tb = table();
        (2.0 * (tb.integrated_cdf(t - 1.25) - tb.integrated_cdf(t - 1.75))).clamp(0.0, 1.0)
    }
}

/// `η′(t)` for `t ≥ 0` without argument checking.
#[inline]
pub fn eta_prime(t: f64) -> f64 {
    if t <= 1.0 || t >= 2.0 {
        0.0
    } else {
        let tb = table();
        (2.0 * (tb.cdf(t - 1.25) - tb.cdf(t - 1.75))).clamp(0.0, 2.0)
    }
}

pub fn eta_eval(t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(BgkError::InvalidArgument(format!("cutoff argument must be nonnegative, got {t}")));
    }
    Ok(eta(t))
}

pub fn eta_deriv(t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(BgkError::InvalidArgument(format!("cutoff argument must be nonnegative, got {t}")));
    }
    Ok(eta_prime(t))
}
