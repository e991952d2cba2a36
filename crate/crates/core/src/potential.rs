//! The Bogovskiĭ potential `v(x) = ∫_Ω F(y) N(x, y) dy`, its regularization
//! `v^ε`, `div v^ε`, and the derivative representation of `∇v`.
//!
//! All volume integrals are taken in polar coordinates around `x`. Along a
//! direction `u` the point `y = x + ρu` sees `x − y = ρω` with `ω = −u`, so the
//! ray moments of `ψ` from `x` along `ω` do not depend on `ρ` and are computed
//! once per direction:
//!
//! ```text
//! N(x, x + ρu)·ρ^{n−1} = ω Σ_k C(n−1,k) ρ^{n−1−k} a_k
//! ```

use std::fmt;
use std::sync::Arc;

use crate::bump::{eta, eta_prime, Mollifier};
use crate::error::{BgkError, Result};
use crate::geometry::{verify_star_shaped, Ball, StarDomain};
use crate::kernel::{binomial, KernelContext};
use crate::point::{Mat, Point, QuadValue};
use crate::quadrature::{
    graded_breaks, integrate_1d, integrate_1d_breaks, integrate_polar, integrate_polar_directional, integrate_sphere,
    Integral, QuadConfig, SphereRule,
};

/// A datum `F`.
#[derive(Clone)]
pub struct ScalarField {
    pub label: String,
    func: Arc<dyn Fn(&Point) -> f64 + Send + Sync>,
    pub declared_zero_mean: bool,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScalarField({})", self.label)
    }
}

impl ScalarField {
    pub fn new(label: impl Into<String>, func: impl Fn(&Point) -> f64 + Send + Sync + 'static) -> Self {
        Self { label: label.into(), func: Arc::new(func), declared_zero_mean: false }
    }

    pub fn zero() -> Self {
        Self::new("0", |_| 0.0).with_zero_mean(true)
    }

    pub fn constant(c: f64) -> Self {
        Self::new(format!("{c:?}"), move |_| c)
    }

    pub fn with_zero_mean(mut self, zero_mean: bool) -> Self {
        self.declared_zero_mean = zero_mean;
        self
    }

    #[inline]
    pub fn eval(&self, x: &Point) -> f64 {
        (self.func)(x)
    }

    /// `a·F + b·G`.
    pub fn combine(a: f64, f: &ScalarField, b: f64, g: &ScalarField) -> Self {
        let (f2, g2) = (f.clone(), g.clone());
        Self::new(format!("{a:?}*({}) + {b:?}*({})", f.label, g.label), move |x| a * f2.eval(x) + b * g2.eval(x))
            .with_zero_mean(f.declared_zero_mean && g.declared_zero_mean)
    }

    /// `z ↦ F(x0 + scale·z)`.
    pub fn scaled(&self, x0: &Point, scale: f64) -> Self {
        let f = self.clone();
        let x0 = *x0;
        Self::new(format!("{}∘scale", self.label), move |z| f.eval(&(x0 + *z * scale)))
            .with_zero_mean(self.declared_zero_mean)
    }

    /// Fails if `F` is not finite at one of `samples` Halton points of `d`.
    pub fn check_finite(&self, d: &StarDomain, samples: usize) -> Result<()> {
        for x in crate::kernel::interior_samples(d, samples, 0) {
            let v = self.eval(&x);
            if !v.is_finite() {
                return Err(BgkError::NonFiniteField { value: v, point: x.as_slice().to_vec() });
            }
        }
        Ok(())
    }
}

/// Strictly decreasing positive cutoff scales.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EpsilonSchedule {
    values: Vec<f64>,
}

impl EpsilonSchedule {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(BgkError::InvalidArgument("epsilon schedule is empty".into()));
        }
        if values.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return Err(BgkError::InvalidArgument("epsilon values must be positive".into()));
        }
        if values.windows(2).any(|w| w[1] >= w[0]) {
            return Err(BgkError::InvalidArgument("epsilon schedule must be strictly decreasing".into()));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        Self { values: vec![1e-1, 3e-2, 1e-2, 3e-3, 1e-3] }
    }
}

/// Anything that behaves like the solution `v` of `div v = F`.
pub trait VectorPotential: Send + Sync {
    fn dim(&self) -> usize;
    fn v(&self, x: &Point) -> Result<Point>;
    fn v_eps(&self, x: &Point, eps: f64) -> Result<Point>;
    fn div_v_eps(&self, x: &Point, eps: f64) -> Result<f64>;
    /// `∂ⱼvᵢ`; `x` must lie in the domain.
    fn grad(&self, x: &Point) -> Result<Mat>;
    fn div(&self, x: &Point) -> Result<f64> {
        Ok(self.grad(x)?.trace())
    }
    fn inside(&self, x: &Point) -> bool;
}

/// `Σ_k C(n−1,k) a_k ρ^{n−1−k}`.
#[inline]
fn moment_poly(a: &[f64; 3], n: usize, rho: f64) -> f64 {
    let mut s = 0.0;
    for (k, ak) in a.iter().enumerate().take(n) {
        s += binomial(n - 1, k) * ak * rho.powi((n - 1 - k) as i32);
    }
    s
}

fn zero_integral<T: QuadValue>(zero: T) -> Integral<T> {
    Integral { value: zero, error: 0.0, converged: true, evaluations: 0 }
}

fn merge<T: QuadValue>(acc: &mut Integral<T>, part: Integral<T>) {
    acc.value = acc.value.add(part.value);
    acc.error += part.error;
    acc.converged &= part.converged;
    acc.evaluations += part.evaluations;
}

/// Breakpoints of `[s0, s1]` with the cut points that fall strictly inside.
fn with_cuts(s0: f64, s1: f64, cuts: &[f64]) -> Vec<f64> {
    let mut b = vec![s0];
    b.extend(cuts.iter().copied().filter(|c| *c > s0 && *c < s1));
    b.push(s1);
    b
}

#[derive(Clone, Debug)]
pub struct PotentialField {
    pub ctx: KernelContext,
    pub field: ScalarField,
    /// `B_R` of the derivative representation.
    pub big_ball: Ball,
    pub quad: QuadConfig,
    rule: SphereRule,
}

/// Default `B_R`: centered at the center ball, radius `factor·r + 1` where `r`
/// bounds `Ω` about that center.
pub fn default_big_ball(d: &StarDomain, factor: f64) -> Ball {
    let c = d.center_ball.center;
    let bb = d.bounding_ball();
    let r = bb.center.dist(&c) + bb.radius;
    Ball { center: c, radius: factor * r + 1.0 }
}

impl PotentialField {
    pub fn new(ctx: KernelContext, field: ScalarField, quad: QuadConfig) -> Result<Self> {
        quad.validate()?;
        let rule = SphereRule::new(ctx.dim(), &quad)?;
        let big_ball = default_big_ball(&ctx.domain, 1.25);
        Ok(Self { ctx, field, big_ball, quad, rule })
    }

    /// Mollifier on the domain's center ball and default quadrature.
    pub fn for_domain(domain: StarDomain, field: ScalarField) -> Result<Self> {
        let quad = QuadConfig::for_dim(domain.dim());
        Self::new(KernelContext::for_domain(domain)?, field, quad)
    }

    pub fn with_big_ball(mut self, big_ball: Ball) -> Result<Self> {
        big_ball.center.check_dim(self.ctx.dim())?;
        let bb = self.ctx.domain.bounding_ball();
        if bb.center.dist(&big_ball.center) + bb.radius >= big_ball.radius {
            return Err(BgkError::InvalidGeometry("B_R must contain the closure of the domain".into()));
        }
        self.big_ball = big_ball;
        Ok(self)
    }

    pub fn domain(&self) -> &StarDomain {
        &self.ctx.domain
    }

    pub fn mollifier(&self) -> &Mollifier {
        &self.ctx.mollifier
    }

    pub fn sphere_rule(&self) -> &SphereRule {
        &self.rule
    }

    /// `∫_Ω F`.
    pub fn field_integral(&self) -> Result<Integral<f64>> {
        let c = self.ctx.domain.center_ball.center;
        integrate_polar(|y| self.field.eval(y), &c, &self.ctx.domain, &self.quad)
    }

    /// `∫_Ω F(y) N(x, y) η(|x − y|/ε) dy` by polar quadrature around `x`,
    /// without any shortcut for `x ∉ Ω`. `eps = None` means `η ≡ 1`.
    pub fn potential_integral(&self, x: &Point, eps: Option<f64>) -> Result<Integral<Point>> {
        x.check_dim(self.ctx.dim())?;
        if let Some(e) = eps {
            if !(e > 0.0) {
                return Err(BgkError::InvalidArgument(format!("epsilon must be positive, got {e}")));
            }
        }
        let n = self.ctx.dim();
        let zero = Point::zeros(n);
        integrate_polar_directional(x, &self.ctx.domain, &self.rule, |u, segments| {
            let omega = -*u;
            let a = self.ctx.psi_moments(x, &omega)?;
            if segments.is_empty() || a.iter().all(|v| *v == 0.0) {
                return Ok(zero_integral(zero));
            }
            let mut acc = zero_integral(0.0);
            for &(s0, s1) in segments {
                let (lo, cuts) = match eps {
                    Some(e) => (s0.max(e), vec![2.0 * e]),
                    None => (s0, vec![]),
                };
                if lo >= s1 {
                    continue;
                }
                let breaks = with_cuts(lo, s1, &cuts);
                let part = integrate_1d_breaks(
                    |rho| {
                        let w = eps.map_or(1.0, |e| eta(rho / e));
                        self.field.eval(&(*x + *u * rho)) * moment_poly(&a, n, rho) * w
                    },
                    &breaks,
                    &self.quad,
                )?;
                merge(&mut acc, part);
            }
            Ok(Integral {
                value: omega * acc.value,
                error: acc.error,
                converged: acc.converged,
                evaluations: acc.evaluations,
            })
        })
    }

    /// `v(x)`; exactly zero outside `Ω`.
    pub fn v_eval(&self, x: &Point) -> Result<Point> {
        if !self.ctx.domain.contains(x)? {
            return Ok(Point::zeros(self.ctx.dim()));
        }
        Ok(self.potential_integral(x, None)?.value)
    }

    /// `v(x)` computed by quadrature even when `x ∉ Ω`.
    pub fn v_eval_full(&self, x: &Point) -> Result<Point> {
        Ok(self.potential_integral(x, None)?.value)
    }

    /// `v^ε(x)`; exactly zero outside `Ω`.
    pub fn v_eps_eval(&self, x: &Point, eps: f64) -> Result<Point> {
        if !(eps > 0.0) {
            return Err(BgkError::InvalidArgument(format!("epsilon must be positive, got {eps}")));
        }
        if !self.ctx.domain.contains(x)? {
            return Ok(Point::zeros(self.ctx.dim()));
        }
        Ok(self.potential_integral(x, Some(eps))?.value)
    }

    /// `div v^ε(x) = −ψ(x)∫_Ω F η(|x−y|/ε) dy + ∫ F(y) N(x,y)·(x−y)/|x−y| η′(|x−y|/ε) ε⁻¹ dy`,
    /// using `div_x N(x, y) = −ψ(x)` for `y ≠ x`.
    pub fn div_v_eps(&self, x: &Point, eps: f64) -> Result<f64> {
        x.check_dim(self.ctx.dim())?;
        if !(eps > 0.0) {
            return Err(BgkError::InvalidArgument(format!("epsilon must be positive, got {eps}")));
        }
        if !self.ctx.domain.contains(x)? {
            return Err(BgkError::OutsideDomain(x.as_slice().to_vec()));
        }
        let dist = self.ctx.domain.boundary_distance(x)?;
        if 2.0 * eps >= dist {
            return Err(BgkError::CutoffReachesBoundary { two_eps: 2.0 * eps, dist });
        }
        let n = self.ctx.dim();
        let psi_x = self.ctx.mollifier.eval(x);
        let r = integrate_polar_directional(x, &self.ctx.domain, &self.rule, |u, segments| {
            let mut acc = zero_integral([0.0f64; 2]);
            if psi_x != 0.0 {
                for &(s0, s1) in segments {
                    let lo = s0.max(eps);
                    if lo >= s1 {
                        continue;
                    }
                    let part = integrate_1d_breaks(
                        |rho| self.field.eval(&(*x + *u * rho)) * rho.powi(n as i32 - 1) * eta(rho / eps),
                        &with_cuts(lo, s1, &[2.0 * eps]),
                        &self.quad,
                    )?;
                    merge(
                        &mut acc,
                        Integral {
                            value: [part.value, 0.0],
                            error: part.error,
                            converged: part.converged,
                            evaluations: part.evaluations,
                        },
                    );
                }
            }
            let omega = -*u;
            let a = self.ctx.psi_moments(x, &omega)?;
            if a.iter().any(|v| *v != 0.0) {
                let part = integrate_1d_breaks(
                    |rho| self.field.eval(&(*x + *u * rho)) * moment_poly(&a, n, rho) * eta_prime(rho / eps) / eps,
                    &[eps, 1.5 * eps, 2.0 * eps],
                    &self.quad,
                )?;
                merge(
                    &mut acc,
                    Integral {
                        value: [0.0, part.value],
                        error: part.error,
                        converged: part.converged,
                        evaluations: part.evaluations,
                    },
                );
            }
            Ok(acc)
        })?;
        Ok(-psi_x * r.value[0] + r.value[1])
    }

    /// `∂ⱼvᵢ(x)` from the three-term representation
    ///
    /// ```text
    /// ∫_{B_R} [F̃(y) − F(x)] ∂ₓⱼNᵢ(x,y) dy
    ///   + F(x) ∫_{B_R} (xᵢ − yᵢ) ∫₁^∞ ∂ⱼψ(y + α(x − y)) α^{n−1} dα dy
    ///   − F(x) ∫_{∂B_R} Nᵢ(x,y) νⱼ(y) dσ
    /// ```
    ///
    /// with `F̃` the extension of `F` by zero.
    pub fn grad_v_detailed(&self, x: &Point) -> Result<Integral<Mat>> {
        x.check_dim(self.ctx.dim())?;
        if !self.ctx.domain.contains(x)? {
            return Err(BgkError::OutsideDomain(x.as_slice().to_vec()));
        }
        let n = self.ctx.dim();
        let fx = self.field.eval(x);
        if !fx.is_finite() {
            return Err(BgkError::NonFiniteField { value: fx, point: x.as_slice().to_vec() });
        }
        let big = self.big_ball;
        let volume = integrate_polar_directional(x, &self.ctx.domain, &self.rule, |u, segments| {
            let omega = -*u;
            let m = self.ctx.ray_moments(x, &omega)?;
            if m.is_zero() {
                return Ok(zero_integral(Mat::zeros(n)));
            }
            let rho_big = big.chord(x, u).map(|(_, t1)| t1).unwrap_or(0.0);
            // D_p = ∫₀^{ρ_R} (F̃(x+ρu) − F(x)) ρ^p dρ for p = −1..n−1.
            let mut d = zero_integral([0.0f64; 4]);
            let mut inside_end = 0.0;
            let mut outside: Vec<(f64, f64)> = Vec::new();
            for &(s0, s1) in segments {
                let s1 = s1.min(rho_big);
                if s0 > inside_end {
                    outside.push((inside_end, s0));
                }
                inside_end = s1;
                if s1 <= s0 {
                    continue;
                }
                let breaks: Vec<f64> = if s0 == 0.0 {
                    graded_breaks(s1, self.quad.radial_grading, self.quad.radial_panels)
                } else {
                    vec![s0, s1]
                };
                let part = integrate_1d_breaks(
                    |rho| {
                        let diff = self.field.eval(&(*x + *u * rho)) - fx;
                        let mut out = [0.0; 4];
                        let mut pw = 1.0 / rho;
                        for o in out.iter_mut().take(n + 1) {
                            *o = diff * pw;
                            pw *= rho;
                        }
                        out
                    },
                    &breaks,
                    &self.quad,
                )?;
                merge(&mut d, part);
            }
            if inside_end < rho_big {
                outside.push((inside_end, rho_big));
            }
            for (a, b) in outside {
                for p in -1..n as i32 {
                    let w = if p == -1 { (b / a).ln() } else { (b.powi(p + 1) - a.powi(p + 1)) / (p + 1) as f64 };
                    d.value[(p + 1) as usize] -= fx * w;
                }
            }
            let coeffs = self.ctx.dn_power_coefficients(&m, &omega);
            let mut term = Mat::zeros(n);
            for (idx, c) in coeffs.iter().enumerate() {
                term = term + *c * d.value[idx];
            }
            // F(x)·∫₀^{ρ_R} ωᵢ Σ_k C(n−1,k) b_{jk} ρ^{n−1−k} dρ.
            for i in 0..n {
                for j in 0..n {
                    let mut s = 0.0;
                    for k in 0..n {
                        s += binomial(n - 1, k) * m.b[j][k] * rho_big.powi((n - k) as i32) / (n - k) as f64;
                    }
                    term.set(i, j, term.get(i, j) + fx * omega[i] * s);
                }
            }
            let mut err = d.error;
            for c in &coeffs {
                err += c.max_abs() * d.error;
            }
            Ok(Integral { value: term, error: err, converged: d.converged, evaluations: d.evaluations })
        })?;
        let mut value = volume.value;
        if fx != 0.0 {
            value = value - self.boundary_flux(x)? * fx;
        }
        Ok(Integral { value, ..volume })
    }

    /// `∫_{∂B_R} Nᵢ(x, y) νⱼ(y) dσ`.
    pub fn boundary_flux(&self, x: &Point) -> Result<Mat> {
        let n = self.ctx.dim();
        let big = self.big_ball;
        let jac = big.radius.powi(n as i32 - 1);
        let mut err = None;
        let mut integrand = |nu: &Point| -> [f64; 9] {
            let y = big.center + *nu * big.radius;
            let nv = match self.ctx.kernel_n(x, &y) {
                Ok(v) => v,
                Err(e) => {
                    err.get_or_insert(e);
                    return [0.0; 9];
                }
            };
            let mut o = [0.0; 9];
            for i in 0..n {
                for j in 0..n {
                    o[3 * i + j] = nv[i] * nu[j] * jac;
                }
            }
            o
        };
        let v: [f64; 9] = if n == 2 {
            let cfg = QuadConfig { abs_tol: 1e-14, ..self.quad.clone() };
            integrate_1d(
                |t: f64| integrand(&Point::from_slice(&[t.cos(), t.sin()])),
                0.0,
                2.0 * std::f64::consts::PI,
                &cfg,
            )?
            .value
        } else {
            let rule = SphereRule::new(n, &self.quad.clone().refined_angles(2))?;
            integrate_sphere(|nu| Ok(integrand(nu)), &rule)?
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

    pub fn grad_v(&self, x: &Point) -> Result<Mat> {
        Ok(self.grad_v_detailed(x)?.value)
    }
}

impl VectorPotential for PotentialField {
    fn dim(&self) -> usize {
        self.ctx.dim()
    }
    fn v(&self, x: &Point) -> Result<Point> {
        self.v_eval(x)
    }
    fn v_eps(&self, x: &Point, eps: f64) -> Result<Point> {
        self.v_eps_eval(x, eps)
    }
    fn div_v_eps(&self, x: &Point, eps: f64) -> Result<f64> {
        PotentialField::div_v_eps(self, x, eps)
    }
    fn grad(&self, x: &Point) -> Result<Mat> {
        self.grad_v(x)
    }
    fn inside(&self, x: &Point) -> bool {
        self.ctx.domain.inside(x)
    }
}

/// `v(x) = R·w((x − x₀)/R)` where `w` solves the problem mapped onto the
/// unit center ball.
#[derive(Clone, Debug)]
pub struct ScaledPotential {
    pub x0: Point,
    pub scale: f64,
    pub inner: PotentialField,
}

impl ScaledPotential {
    #[inline]
    pub fn to_unit(&self, x: &Point) -> Point {
        (*x - self.x0) * (1.0 / self.scale)
    }
}

impl VectorPotential for ScaledPotential {
    fn dim(&self) -> usize {
        self.inner.ctx.dim()
    }
    fn v(&self, x: &Point) -> Result<Point> {
        Ok(self.inner.v_eval(&self.to_unit(x))? * self.scale)
    }
    fn v_eps(&self, x: &Point, eps: f64) -> Result<Point> {
        Ok(self.inner.v_eps_eval(&self.to_unit(x), eps / self.scale)? * self.scale)
    }
    fn div_v_eps(&self, x: &Point, eps: f64) -> Result<f64> {
        self.inner.div_v_eps(&self.to_unit(x), eps / self.scale)
    }
    fn grad(&self, x: &Point) -> Result<Mat> {
        self.inner.grad_v(&self.to_unit(x))
    }
    fn inside(&self, x: &Point) -> bool {
        self.inner.ctx.domain.inside(&self.to_unit(x))
    }
}

/// Number of segment samples used by the star-shape gate of [`scaled_solve`].
pub const STAR_GATE_SAMPLES: usize = 2000;

/// Solves on `Ω` with the mollifier supported in `b` by mapping `b` onto the
/// unit ball. Refuses domains that fail the star-shape gate.
pub fn scaled_solve(field: &ScalarField, domain: &StarDomain, b: &Ball, quad: QuadConfig) -> Result<ScaledPotential> {
    let report = verify_star_shaped(domain, b, STAR_GATE_SAMPLES)?;
    if !report.ok {
        let (y, z) = report.worst_pair.expect("failed report carries a witness");
        return Err(BgkError::StarShapeViolation { y: y.as_slice().to_vec(), z: z.as_slice().to_vec() });
    }
    let x0 = b.center;
    let r = b.radius;
    let mut unit_domain = domain.scaled(&x0, r)?;
    let unit = Ball::new(Point::zeros(domain.dim()), 1.0)?;
    unit_domain.center_ball = unit;
    let mollifier = Mollifier::new(unit)?;
    let ctx = KernelContext::new(mollifier, unit_domain)?;
    let inner = PotentialField::new(ctx, field.scaled(&x0, r), quad)?;
    Ok(ScaledPotential { x0, scale: r, inner })
}
