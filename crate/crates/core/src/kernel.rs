//! The Bogovskiĭ kernel
//!
//! `N(x, y) = (x − y)/|x − y|ⁿ ∫_{|x−y|}^∞ ψ(y + ξω) ξ^{n−1} dξ`, `ω = (x − y)/|x − y|`,
//!
//! its equivalent forms, its `x`-derivative and the split `∂ₓⱼNᵢ = Kᵢⱼ + Gᵢⱼ`.
//!
//! Most evaluations go through ray moments taken from `x` along `ω`:
//! `a_k = ∫₀^∞ ψ(x + rω) r^k dr` and `b_{jk} = ∫₀^∞ ∂ⱼψ(x + rω) r^k dr`.
//! With `d = |x − y|`, the binomial expansion of `(r + d)^m` gives
//!
//! ```text
//! N       = ω Σ_k C(n−1,k) d^{−k} a_k
//! ∂ₓⱼNᵢ   = δᵢⱼ Σ_k C(n−1,k) d^{−1−k} a_k + ωᵢ Σ_k C(n,k) d^{−k} b_{jk}
//! ```
//!
//! `K` collects the `d^{−n}` terms and `G` everything else.

use rand::Rng;

use crate::bump::Mollifier;
use crate::error::{BgkError, Result};
use crate::geometry::StarDomain;
use crate::point::{Mat, Point, QuadValue};
use crate::quadrature::{integrate_1d, integrate_sphere, QuadConfig, SphereRule};
use crate::sampling::{random_direction, seeded_rng, Halton};

/// Deliberate corruption of the kernel, used to show the checks can fail.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum KernelMutation {
    #[default]
    None,
    /// Drops `zᵢ|z|^{−n−1}∫∂ⱼψ rⁿ dr` from `K`.
    DropGradTermInK,
}

/// Ray moments from a base point along a unit direction.
#[derive(Clone, Copy, Debug, Default)]
pub struct RayMoments {
    /// `a[k] = ∫ψ r^k`, `k < n`.
    pub a: [f64; 3],
    /// `b[j][k] = ∫∂ⱼψ r^k`, `k ≤ n`.
    pub b: [[f64; 4]; 3],
}

impl RayMoments {
    pub fn is_zero(&self) -> bool {
        self.a.iter().all(|&v| v == 0.0) && self.b.iter().flatten().all(|&v| v == 0.0)
    }
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    let mut c = 1.0;
    for i in 0..k {
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    c
}

#[derive(Clone, Debug)]
pub struct KernelContext {
    pub mollifier: Mollifier,
    pub domain: StarDomain,
    /// Tolerances of the one-dimensional ray integrals.
    pub ray_quad: QuadConfig,
    pub mutation: KernelMutation,
}

impl KernelContext {
    pub fn new(mollifier: Mollifier, domain: StarDomain) -> Result<Self> {
        if mollifier.dim() != domain.dim() {
            return Err(BgkError::DimensionMismatch { expected: domain.dim(), found: mollifier.dim() });
        }
        let ray_quad = QuadConfig { rel_tol: 1e-12, abs_tol: 1e-15, max_subdivisions: 200, ..QuadConfig::default() };
        Ok(Self { mollifier, domain, ray_quad, mutation: KernelMutation::None })
    }

    /// Mollifier supported in the domain's center ball.
    pub fn for_domain(domain: StarDomain) -> Result<Self> {
        Self::new(Mollifier::new(domain.center_ball)?, domain)
    }

    pub fn with_mutation(mut self, mutation: KernelMutation) -> Self {
        self.mutation = mutation;
        self
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    /// Upper limit of the `ξ` integral: `|y − x₀| + R`.
    pub fn xi_max(&self, y: &Point) -> f64 {
        let b = &self.mollifier.support;
        y.dist(&b.center) + b.radius
    }

    fn check_pair(&self, x: &Point, y: &Point) -> Result<(Point, f64)> {
        x.check_dim(self.dim())?;
        y.check_dim(self.dim())?;
        let z = *x - *y;
        let d = z.norm();
        if d == 0.0 {
            return Err(BgkError::KernelDiagonal);
        }
        Ok((z * (1.0 / d), d))
    }

    /// `[lo, hi] ∩ chord` of the support ball on the ray `origin + t·dir`.
    fn clip(&self, origin: &Point, dir: &Point, lo: f64, hi: f64) -> Option<(f64, f64)> {
        let (t0, t1) = self.mollifier.support.chord(origin, dir)?;
        let (a, b) = (t0.max(lo), t1.min(hi));
        (a < b).then_some((a, b))
    }

    /// `∫_{|x−y|}^{ξmax} ψ(y + ξω) ξ^{n−1} dξ`.
    pub fn ray_integral(&self, x: &Point, y: &Point) -> Result<f64> {
        let (omega, d) = self.check_pair(x, y)?;
        let Some((a, b)) = self.clip(y, &omega, d, self.xi_max(y)) else {
            return Ok(0.0);
        };
        let n = self.dim() as i32;
        let r = integrate_1d(|xi| self.mollifier.eval(&(*y + omega * xi)) * xi.powi(n - 1), a, b, &self.ray_quad)?;
        Ok(r.value)
    }

    /// `N(x, y)` in its defining `ξ` form.
    pub fn kernel_n(&self, x: &Point, y: &Point) -> Result<Point> {
        let (omega, d) = self.check_pair(x, y)?;
        let ray = self.ray_integral(x, y)?;
        Ok(omega * (ray / d.powi(self.dim() as i32 - 1)))
    }

    /// `N(x, y) = (x − y) ∫₁^∞ ψ(y + α(x − y)) α^{n−1} dα`.
    pub fn kernel_n_alpha(&self, x: &Point, y: &Point) -> Result<Point> {
        let (omega, d) = self.check_pair(x, y)?;
        let z = *x - *y;
        // α parametrizes y + α·z; the unit-speed chord is divided by d.
        let Some((t0, t1)) = self.clip(y, &omega, d, f64::INFINITY) else {
            return Ok(Point::zeros(self.dim()));
        };
        let n = self.dim() as i32;
        let r =
            integrate_1d(|al| self.mollifier.eval(&(*y + z * al)) * al.powi(n - 1), t0 / d, t1 / d, &self.ray_quad)?;
        Ok(z * r.value)
    }

    /// `N(x, y) = (x − y)/|x − y|ⁿ ∫₀^∞ ψ(x + rω)(|x − y| + r)^{n−1} dr`.
    pub fn kernel_n_r(&self, x: &Point, y: &Point) -> Result<Point> {
        let (omega, d) = self.check_pair(x, y)?;
        let Some((a, b)) = self.clip(x, &omega, 0.0, f64::INFINITY) else {
            return Ok(Point::zeros(self.dim()));
        };
        let n = self.dim() as i32;
        let r = integrate_1d(|r| self.mollifier.eval(&(*x + omega * r)) * (d + r).powi(n - 1), a, b, &self.ray_quad)?;
        Ok(omega * (r.value / d.powi(n - 1)))
    }

    /// Kernel of the `z = x − y` form, `z/|z|ⁿ ∫₀^∞ ψ(x + r z/|z|)(|z| + r)^{n−1} dr`,
    /// evaluated through the binomial expansion of the ray moments.
    pub fn kernel_n_z(&self, x: &Point, z: &Point) -> Result<Point> {
        x.check_dim(self.dim())?;
        let d = z.norm();
        if d == 0.0 {
            return Err(BgkError::ZeroDirection);
        }
        let omega = *z * (1.0 / d);
        let a = self.psi_moments(x, &omega)?;
        let n = self.dim();
        let mut s = 0.0;
        for (k, ak) in a.iter().enumerate().take(n) {
            s += binomial(n - 1, k) * ak * d.powi(-(k as i32));
        }
        Ok(omega * s)
    }

    /// `a_k = ∫₀^∞ ψ(x + rω) r^k dr` for `k < n`.
    pub fn psi_moments(&self, x: &Point, omega: &Point) -> Result<[f64; 3]> {
        let Some((a, b)) = self.clip(x, omega, 0.0, f64::INFINITY) else {
            return Ok([0.0; 3]);
        };
        let n = self.dim();
        let r = integrate_1d(
            |r| {
                let p = self.mollifier.eval(&(*x + *omega * r));
                let mut out = [0.0; 3];
                let mut rk = 1.0;
                for o in out.iter_mut().take(n) {
                    *o = p * rk;
                    rk *= r;
                }
                out
            },
            a,
            b,
            &self.ray_quad,
        )?;
        Ok(r.value)
    }

    /// All ray moments `a_k` and `b_{jk}` from `x` along the unit vector `omega`.
    pub fn ray_moments(&self, x: &Point, omega: &Point) -> Result<RayMoments> {
        let Some((a, b)) = self.clip(x, omega, 0.0, f64::INFINITY) else {
            return Ok(RayMoments::default());
        };
        let n = self.dim();
        let r = integrate_1d(
            |r| {
                let (p, g) = self.mollifier.eval_with_grad(&(*x + *omega * r));
                let mut out = [0.0; 16];
                let mut rk = 1.0;
                for k in 0..=n {
                    if k < n {
                        out[k] = p * rk;
                    }
                    for j in 0..n {
                        out[3 + 4 * j + k] = g[j] * rk;
                    }
                    rk *= r;
                }
                out
            },
            a,
            b,
            &self.ray_quad,
        )?;
        let mut m = RayMoments::default();
        m.a.copy_from_slice(&r.value[..3]);
        for j in 0..3 {
            m.b[j].copy_from_slice(&r.value[3 + 4 * j..7 + 4 * j]);
        }
        Ok(m)
    }

    /// Coefficients `C_p`, `p = −1..n−1`, of `∂ₓN(x, x − dω)·d^{n−1} = Σ_p C_p d^p`.
    /// `C_{−1}` is `k(x, ω)`; the mutation acts on it.
    pub fn dn_power_coefficients(&self, m: &RayMoments, omega: &Point) -> Vec<Mat> {
        let n = self.dim();
        let mut c = vec![Mat::zeros(n); n + 1];
        // δᵢⱼ C(n−1,k) a_k d^{n−2−k}
        for k in 0..n {
            let p = n as i64 - 2 - k as i64;
            let w = binomial(n - 1, k) * m.a[k];
            let cp = &mut c[(p + 1) as usize];
            for i in 0..n {
                cp.set(i, i, cp.get(i, i) + w);
            }
        }
        // ωᵢ C(n,k) b_{jk} d^{n−1−k}
        for k in 0..=n {
            if k == n && self.mutation == KernelMutation::DropGradTermInK {
                continue;
            }
            let p = n as i64 - 1 - k as i64;
            let w = binomial(n, k);
            let cp = &mut c[(p + 1) as usize];
            for i in 0..n {
                for j in 0..n {
                    cp.set(i, j, cp.get(i, j) + w * omega[i] * m.b[j][k]);
                }
            }
        }
        c
    }

    /// `(K(x, x − y), G(x, y))`.
    pub fn split(&self, x: &Point, y: &Point) -> Result<(Mat, Mat)> {
        let (omega, d) = self.check_pair(x, y)?;
        let m = self.ray_moments(x, &omega)?;
        Ok(self.split_from_moments(&m, &omega, d))
    }

    pub(crate) fn split_from_moments(&self, m: &RayMoments, omega: &Point, d: f64) -> (Mat, Mat) {
        let n = self.dim() as i32;
        let c = self.dn_power_coefficients(m, omega);
        let scale = d.powi(1 - n);
        let k = c[0] * (scale / d);
        let mut g = Mat::zeros(self.dim());
        for (idx, cp) in c.iter().enumerate().skip(1) {
            g = g + *cp * (scale * d.powi(idx as i32 - 1));
        }
        (k, g)
    }

    /// `∂ₓⱼNᵢ(x, y)` as `K + G`.
    pub fn kernel_dn(&self, x: &Point, y: &Point) -> Result<Mat> {
        let (k, g) = self.split(x, y)?;
        Ok(k + g)
    }

    /// `Kᵢⱼ(x, z) = δᵢⱼ|z|^{−n}∫ψ(x + rẑ)r^{n−1}dr + zᵢ|z|^{−n−1}∫∂ⱼψ(x + rẑ)rⁿdr`.
    pub fn kernel_k_big(&self, x: &Point, z: &Point) -> Result<Mat> {
        let d = z.norm();
        if d == 0.0 {
            return Err(BgkError::ZeroDirection);
        }
        Ok(self.kernel_k(x, z)? * d.powi(-(self.dim() as i32)))
    }

    /// `k(x, z) = |z|ⁿ K(x, z)`, homogeneous of degree 0 in `z`.
    pub fn kernel_k(&self, x: &Point, z: &Point) -> Result<Mat> {
        x.check_dim(self.dim())?;
        z.check_dim(self.dim())?;
        let omega = z.normalized().ok_or(BgkError::ZeroDirection)?;
        let m = self.ray_moments(x, &omega)?;
        Ok(self.dn_power_coefficients(&m, &omega)[0])
    }

    /// `G(x, y) = ∂ₓN(x, y) − K(x, x − y)`.
    pub fn kernel_g(&self, x: &Point, y: &Point) -> Result<Mat> {
        Ok(self.split(x, y)?.1)
    }

    /// `∫_{|z|=1} k(x, z) dz` with a fixed sphere rule.
    pub fn sphere_mean_k_rule(&self, x: &Point, rule: &SphereRule) -> Result<Mat> {
        integrate_sphere(|u| self.kernel_k(x, u), rule)
    }

    /// `∫_{|z|=1} k(x, z) dz`, integrating adaptively over the cap of
    /// directions whose rays from `x` meet the support of `ψ`.
    pub fn sphere_mean_k(&self, x: &Point) -> Result<Mat> {
        x.check_dim(self.dim())?;
        let n = self.dim();
        let b = &self.mollifier.support;
        let to_c = b.center - *x;
        let dist = to_c.norm();
        let (axis, half) = if dist > b.radius {
            (to_c * (1.0 / dist), (b.radius / dist).asin())
        } else {
            (Point::axis(n, 0), std::f64::consts::PI)
        };
        // The result is zero, so the tolerance is tied to the size of k
        // along a few directions of the cap.
        let side = if axis[0].abs() < 0.9 { Point::axis(n, 0) } else { Point::axis(n, 1) };
        let side = (side - axis * side.dot(&axis)).normalized().ok_or(BgkError::ZeroDirection)?;
        let mut k_scale: f64 = 1e-300;
        for q in 0..8 {
            let beta = half * q as f64 / 8.0;
            let u = axis * beta.cos() + side * beta.sin();
            k_scale = k_scale.max(self.kernel_k(x, &u)?.max_abs());
        }
        let cfg =
            QuadConfig { rel_tol: 1e-12, abs_tol: 1e-11 * k_scale, max_subdivisions: 200, ..QuadConfig::default() };
        let pack = |m: Mat| -> [f64; 9] {
            let mut o = [0.0; 9];
            for i in 0..n {
                for j in 0..n {
                    o[3 * i + j] = m.get(i, j);
                }
            }
            o
        };
        let mut err = None;
        let v: [f64; 9] = if n == 2 {
            let t0 = axis[1].atan2(axis[0]);
            integrate_1d(
                |t: f64| {
                    let u = Point::from_slice(&[(t0 + t).cos(), (t0 + t).sin()]);
                    self.kernel_k(x, &u).map(pack).unwrap_or_else(|e| {
                        err.get_or_insert(e);
                        [0.0; 9]
                    })
                },
                -half,
                half,
                &cfg,
            )?
            .value
        } else {
            // Orthonormal frame (axis, e1, e2); u = cos β·axis + sin β(cos φ e1 + sin φ e2).
            let helper = if axis[0].abs() < 0.9 { Point::axis(3, 0) } else { Point::axis(3, 1) };
            let e1 = (helper - axis * helper.dot(&axis)).normalized().ok_or(BgkError::ZeroDirection)?;
            let e2 = Point::from_slice(&[
                axis[1] * e1[2] - axis[2] * e1[1],
                axis[2] * e1[0] - axis[0] * e1[2],
                axis[0] * e1[1] - axis[1] * e1[0],
            ]);
            // Periodic in φ, so the trapezoid rule converges geometrically.
            let m = 48;
            integrate_1d(
                |beta: f64| {
                    let (sb, cb) = beta.sin_cos();
                    let mut ring = [0.0; 9];
                    for q in 0..m {
                        let phi = 2.0 * std::f64::consts::PI * q as f64 / m as f64;
                        let (sp, cp) = phi.sin_cos();
                        let u = axis * cb + (e1 * cp + e2 * sp) * sb;
                        let k = self.kernel_k(x, &u).map(pack).unwrap_or_else(|e| {
                            err.get_or_insert(e);
                            [0.0; 9]
                        });
                        ring = ring.add(k);
                    }
                    ring.scale(sb * 2.0 * std::f64::consts::PI / m as f64)
                },
                0.0,
                half,
                &cfg,
            )?
            .value
        };
        if let Some(e) = err {
            return Err(e);
        }
        let mut out = Mat::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.set(i, j, v[3 * i + j]);
            }
        }
        Ok(out)
    }

    /// Right side of the derivative identity
    /// `∂ₓⱼNᵢ + ∂_{yⱼ}Nᵢ = (xᵢ − yᵢ) ∫₁^∞ (∂ⱼψ)(y + α(x − y)) α^{n−1} dα`.
    pub fn derivative_identity_rhs(&self, x: &Point, y: &Point) -> Result<Mat> {
        let (omega, d) = self.check_pair(x, y)?;
        let n = self.dim();
        let mut out = Mat::zeros(n);
        let Some((t0, t1)) = self.clip(y, &omega, d, f64::INFINITY) else {
            return Ok(out);
        };
        let z = *x - *y;
        let r = integrate_1d(
            |al| {
                let g = self.mollifier.grad(&(*y + z * al));
                let w = al.powi(n as i32 - 1);
                [g[0] * w, g[1] * w, if n == 3 { g[2] * w } else { 0.0 }]
            },
            t0 / d,
            t1 / d,
            &self.ray_quad,
        )?;
        for i in 0..n {
            for j in 0..n {
                out.set(i, j, z[i] * r.value[j]);
            }
        }
        Ok(out)
    }

    /// Bound on `|k|` from `‖ψ‖∞ diamⁿ + ‖∇ψ‖∞ diam^{n+1}`.
    pub fn k_bound(&self) -> f64 {
        let diam = self.domain.diameter();
        let n = self.dim() as i32;
        self.mollifier.max_value() * diam.powi(n) + self.mollifier.max_grad() * diam.powi(n + 1)
    }

    /// `(1 + diam Ω)ⁿ·max ψ`.
    pub fn kernel_bound_constant(&self) -> f64 {
        (1.0 + self.domain.diameter()).powi(self.dim() as i32) * self.mollifier.max_value()
    }
}

/// Measured constants of the kernel estimates.
#[derive(Clone, Debug, Default, serde::Serialize)]
pub struct KernelDiagnostics {
    /// `sup |N|·|x − y|^{n−1}` over sampled pairs in `Ω`.
    pub lemma4_constant: f64,
    /// `sup |∂ₓN|·|x − y|ⁿ`.
    #[serde(rename = "thm9_M")]
    pub thm9_m: f64,
    /// `sup |G|·|x − y|^{n−1}`.
    pub g_constant: f64,
    /// `max |∫_{|z|=1} k|` over the probe points.
    pub sphere_mean_residual: f64,
    /// `max |k(x, tz) − k(x, z)|` over `t ∈ {0.1, 1, 7}`.
    pub homogeneity_residual: f64,
    /// Largest ratio of a decade maximum of `|G|·dⁿ⁻¹` to that of the next larger decade.
    pub g_decade_ratio: f64,
    /// Same for `|∂ₓN|·dⁿ`.
    pub dn_decade_ratio: f64,
    /// Decade maxima of `|G|·d^{n−1}`, smallest `d` first.
    pub g_decade_max: Vec<f64>,
    pub dn_decade_max: Vec<f64>,
    pub samples: usize,
}

/// Interior points for diagnostics: Halton points of the bounding box kept if
/// inside `Ω`.
pub fn interior_samples(d: &StarDomain, count: usize, offset: usize) -> Vec<Point> {
    let (lo, hi) = d.bounding_box();
    let mut h = Halton::new(d.dim(), offset);
    let mut out = Vec::with_capacity(count);
    let mut tries = 0;
    while out.len() < count && tries < 1000 * count + 1000 {
        let p = h.next_in_box(&lo, &hi);
        if d.inside(&p) {
            out.push(p);
        }
        tries += 1;
    }
    out
}

fn decade_ratio(maxima: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for w in maxima.windows(2) {
        if w[1] > 0.0 {
            worst = worst.max(w[0] / w[1]);
        } else if w[0] > 0.0 {
            worst = f64::INFINITY;
        }
    }
    worst
}

/// Samples the kernel estimates.
///
/// Pairs for the bound constants are drawn with `x ∈ Ω` and `|x − y|`
/// log-uniform in `[1e−4, diam Ω]`; the bound constant uses pairs with
/// both points in `Ω`. `probes` points are used for the sphere-mean and
/// homogeneity checks.
pub fn measure_diagnostics(ctx: &KernelContext, n_pairs: usize, probes: usize, seed: u64) -> Result<KernelDiagnostics> {
    let dom = &ctx.domain;
    let n = ctx.dim();
    let diam = dom.diameter();
    let mut rng = seeded_rng(seed);
    let xs = interior_samples(dom, n_pairs.max(1), 0);
    let mut out = KernelDiagnostics { samples: n_pairs, ..Default::default() };

    let lo_exp = (1e-4_f64).log10();
    let hi_exp = diam.log10();
    let decades = (hi_exp - lo_exp).ceil().max(1.0) as usize;
    out.g_decade_max = vec![0.0; decades];
    out.dn_decade_max = vec![0.0; decades];

    let ys = interior_samples(dom, n_pairs.max(1), 3);
    for (idx, x) in xs.iter().enumerate() {
        let y = ys[(idx * 7 + 3) % ys.len()];
        if x.dist(&y) > 0.0 {
            let nv = ctx.kernel_n(x, &y)?;
            out.lemma4_constant = out.lemma4_constant.max(nv.norm() * x.dist(&y).powi(n as i32 - 1));
        }

        let e = lo_exp + rng.gen::<f64>() * (hi_exp - lo_exp);
        let d = 10f64.powf(e);
        let omega = random_direction(&mut rng, n);
        let y = *x - omega * d;
        let (k, g) = ctx.split(x, &y)?;
        let dn = k + g;
        let gs = g.max_abs() * d.powi(n as i32 - 1);
        let ds = dn.max_abs() * d.powi(n as i32);
        out.g_constant = out.g_constant.max(gs);
        out.thm9_m = out.thm9_m.max(ds);
        let bin = (((e - lo_exp).floor()) as usize).min(decades - 1);
        out.g_decade_max[bin] = out.g_decade_max[bin].max(gs);
        out.dn_decade_max[bin] = out.dn_decade_max[bin].max(ds);
    }
    out.g_decade_ratio = decade_ratio(&out.g_decade_max);
    out.dn_decade_ratio = decade_ratio(&out.dn_decade_max);

    for x in interior_samples(dom, probes, 5) {
        out.sphere_mean_residual = out.sphere_mean_residual.max(ctx.sphere_mean_k(&x)?.max_abs());
        let z = random_direction(&mut rng, n) * (0.1 + rng.gen::<f64>());
        let k1 = ctx.kernel_k(&x, &z)?;
        for t in [0.1, 1.0, 7.0] {
            let kt = ctx.kernel_k(&x, &(z * t))?;
            out.homogeneity_residual = out.homogeneity_residual.max((kt - k1).max_abs());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Ball;

    fn ctx2() -> KernelContext {
        let o = Point::zeros(2);
        let dom = StarDomain::ball(o, 2.0, Ball::new(o, 1.0).unwrap()).unwrap();
        KernelContext::for_domain(dom).unwrap()
    }

    fn ctx3() -> KernelContext {
        let o = Point::zeros(3);
        let dom = StarDomain::ball(o, 2.0, Ball::new(o, 1.0).unwrap()).unwrap();
        KernelContext::for_domain(dom).unwrap()
    }

    fn p(v: &[f64]) -> Point {
        Point::from_slice(v)
    }

    #[test]
    fn ray_integral_matches_simpson_oracle() {
        let c = ctx2();
        let x = p(&[0.5, 0.0]);
        let y = p(&[-0.5, 0.0]);
        // ψ(y + ξe₁)ξ on [1, 2], 10^6-panel Simpson.
        let f = |xi: f64| c.mollifier.eval(&p(&[-0.5 + xi, 0.0])) * xi;
        let m = 1_000_000;
        let h = 1.0 / m as f64;
        let mut s = f(1.0) + f(2.0);
        for k in 1..m {
            s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(1.0 + k as f64 * h);
        }
        let simpson = s * h / 3.0;
        let got = c.ray_integral(&x, &y).unwrap();
        assert!((got - simpson).abs() < 1e-10, "{got} vs {simpson}");
        assert!((got - 0.132_504_799_972_067_5).abs() < 1e-12);
    }

    #[test]
    fn ray_missing_support_is_zero() {
        let c = ctx2();
        assert_eq!(c.ray_integral(&p(&[5.0, 0.0]), &p(&[4.0, 0.0])).unwrap(), 0.0);
        assert_eq!(c.kernel_n(&p(&[1.5, 1.5]), &p(&[1.2, 1.5])).unwrap().norm(), 0.0);
    }

    #[test]
    fn diagonal_is_an_error() {
        let c = ctx2();
        let x = p(&[0.1, 0.2]);
        assert_eq!(c.kernel_n(&x, &x), Err(BgkError::KernelDiagonal));
        assert_eq!(c.kernel_k(&x, &Point::zeros(2)), Err(BgkError::ZeroDirection));
    }

    #[test]
    fn forms_agree() {
        for c in [ctx2(), ctx3()] {
            let xs = interior_samples(&c.domain, 40, 0);
            let ys = interior_samples(&c.domain, 40, 4);
            for (x, y) in xs.iter().zip(&ys) {
                let a = c.kernel_n(x, y).unwrap();
                let scale = a.max_abs().max(1e-12);
                for b in
                    [c.kernel_n_alpha(x, y).unwrap(), c.kernel_n_r(x, y).unwrap(), c.kernel_n_z(x, &(*x - *y)).unwrap()]
                {
                    assert!((a - b).max_abs() <= 1e-9 * scale, "{a:?} vs {b:?}");
                }
            }
        }
    }

    #[test]
    fn derivative_matches_finite_differences() {
        for c in [ctx2(), ctx3()] {
            let n = c.dim();
            let xs = interior_samples(&c.domain, 20, 1);
            let ys = interior_samples(&c.domain, 20, 4);
            for (x, y) in xs.iter().zip(&ys) {
                let dn = c.kernel_dn(x, y).unwrap();
                let h = 1e-5 * x.dist(y);
                let mut scale: f64 = dn.max_abs();
                let mut fd = Mat::zeros(n);
                for j in 0..n {
                    let e = Point::axis(n, j) * h;
                    let col = (c.kernel_n(&(*x + e), y).unwrap() - c.kernel_n(&(*x - e), y).unwrap()) * (0.5 / h);
                    for i in 0..n {
                        fd.set(i, j, col[i]);
                    }
                }
                scale = scale.max(fd.max_abs()).max(1e-4);
                assert!((dn - fd).max_abs() <= 1e-5 * scale, "{dn:?} vs {fd:?}");
            }
        }
    }

    #[test]
    fn split_sums_to_derivative_and_k_is_homogeneous() {
        let c = ctx3();
        let x = p(&[0.2, -0.1, 0.3]);
        let y = p(&[-0.4, 0.5, 0.1]);
        let (k, g) = c.split(&x, &y).unwrap();
        assert_eq!((k + g - c.kernel_dn(&x, &y).unwrap()).max_abs(), 0.0);
        let z = x - y;
        let kk = c.kernel_k_big(&x, &z).unwrap();
        assert!((kk - k).max_abs() <= 1e-14 * k.max_abs());
        let k1 = c.kernel_k(&x, &z).unwrap();
        for t in [0.1, 7.0] {
            assert!((c.kernel_k(&x, &(z * t)).unwrap() - k1).max_abs() < 1e-14);
        }
    }

    #[test]
    fn sphere_mean_vanishes_unless_mutated() {
        for c in [ctx2(), ctx3()] {
            let n = c.dim();
            let rule = SphereRule::new(n, &QuadConfig::for_dim(n)).unwrap();
            let x = Point::axis(n, 0) * 0.3 + Point::axis(n, 1) * 0.2;
            assert!(c.sphere_mean_k_rule(&x, &rule).unwrap().max_abs() < 1e-8);
            let far = Point::axis(n, 0) * -1.1 + Point::axis(n, 1) * -1.3;
            assert!(c.sphere_mean_k(&far).unwrap().max_abs() < 1e-9);
            assert!(c.sphere_mean_k(&x).unwrap().max_abs() < 1e-9);
            let bad = c.clone().with_mutation(KernelMutation::DropGradTermInK);
            assert!(bad.sphere_mean_k(&x).unwrap().max_abs() > 1e-2);
        }
    }

    #[test]
    fn derivative_identity() {
        let c = ctx2();
        let x = p(&[0.3, 0.4]);
        let y = p(&[-0.6, -0.2]);
        let h = 1e-5;
        let mut dy = Mat::zeros(2);
        for j in 0..2 {
            let e = Point::axis(2, j) * h;
            let col = (c.kernel_n(&x, &(y + e)).unwrap() - c.kernel_n(&x, &(y - e)).unwrap()) * (0.5 / h);
            for i in 0..2 {
                dy.set(i, j, col[i]);
            }
        }
        let lhs = c.kernel_dn(&x, &y).unwrap() + dy;
        let rhs = c.derivative_identity_rhs(&x, &y).unwrap();
        assert!((lhs - rhs).max_abs() < 1e-7, "{lhs:?} vs {rhs:?}");
    }

    #[test]
    fn diagnostics_are_bounded() {
        let c = ctx2();
        let d = measure_diagnostics(&c, 400, 2, 7).unwrap();
        assert!(d.lemma4_constant <= c.kernel_bound_constant());
        assert!(d.sphere_mean_residual < 1e-8);
        assert!(d.homogeneity_residual < 1e-12);
        assert!(d.g_decade_ratio <= 2.0, "{:?}", d.g_decade_max);
        assert!(d.dn_decade_ratio <= 2.0, "{:?}", d.dn_decade_max);
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(3, 0), 1.0);
        assert_eq!(binomial(3, 2), 3.0);
        assert_eq!(binomial(2, 2), 1.0);
    }
}
