//! Executable checks of the kernel and potential identities, and
//! ε-convergence tables.

use rand::Rng;
use rayon::prelude::*;

use crate::bump::eta_eval;
use crate::bump::psi_eval;
use crate::error::{BgkError, Result};
use crate::geometry::{boundary_directions, StarDomain};
use crate::kernel::{interior_samples, measure_diagnostics, KernelContext, KernelMutation};
use crate::point::{Mat, Point};
use crate::potential::{EpsilonSchedule, PotentialField};
use crate::sampling::seeded_rng;

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct CheckReport {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub threshold: f64,
    pub samples: usize,
    pub notes: String,
}

impl CheckReport {
    /// Passes iff `measured ≤ threshold`.
    pub fn at_most(name: &str, measured: f64, threshold: f64, samples: usize, notes: impl Into<String>) -> Self {
        Self { name: name.into(), passed: measured <= threshold, measured, threshold, samples, notes: notes.into() }
    }

    fn failed(name: &str, threshold: f64, err: &BgkError) -> Self {
        Self {
            name: name.into(),
            passed: false,
            measured: f64::NAN,
            threshold,
            samples: 0,
            notes: format!("error: {err}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Quick,
    Full,
}

impl Level {
    pub fn pairs(self) -> usize {
        match self {
            Level::Quick => 100,
            Level::Full => 10_000,
        }
    }

    pub fn probes(self) -> usize {
        match self {
            Level::Quick => 3,
            Level::Full => 9,
        }
    }
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct Thresholds {
    pub outside_vanishing: f64,
    pub kernel_bound: f64,
    pub variant_equivalence: f64,
    pub derivative_identity: f64,
    pub homogeneity: f64,
    pub sphere_mean: f64,
    pub decade_ratio: f64,
    pub divergence: f64,
    pub boundary_continuity: f64,
    pub convergence: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            outside_vanishing: 1e-8,
            kernel_bound: 1.0,
            variant_equivalence: 1e-8,
            derivative_identity: 1e-4,
            homogeneity: 1e-8,
            sphere_mean: 1e-6,
            decade_ratio: 2.0,
            divergence: 1e-2,
            boundary_continuity: 1e-2,
            convergence: 1e-2,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Problem {
    pub potential: PotentialField,
    pub schedule: EpsilonSchedule,
    pub thresholds: Thresholds,
    pub seed: u64,
}

impl Problem {
    pub fn new(potential: PotentialField) -> Self {
        Self { potential, schedule: EpsilonSchedule::default(), thresholds: Thresholds::default(), seed: 0 }
    }

    pub fn with_mutation(mut self, mutation: KernelMutation) -> Self {
        self.potential.ctx = self.potential.ctx.with_mutation(mutation);
        self
    }

    fn ctx(&self) -> &KernelContext {
        &self.potential.ctx
    }

    fn domain(&self) -> &StarDomain {
        &self.potential.ctx.domain
    }

    /// `max(1, max |F|)` over Halton points of `Ω`.
    pub fn field_scale(&self) -> f64 {
        interior_samples(self.domain(), 200, 1).iter().map(|x| self.potential.field.eval(x).abs()).fold(1.0, f64::max)
    }

    /// Interior probes at distance at least `2.5·ε_max` from `∂Ω`.
    pub fn probes(&self, count: usize) -> Result<Vec<Point>> {
        let need = 2.5 * self.schedule.values()[0];
        let mut out = Vec::with_capacity(count);
        for x in interior_samples(self.domain(), 20 * count.max(1), 2) {
            if out.len() == count {
                break;
            }
            if self.domain().boundary_distance(&x)? > need {
                out.push(x);
            }
        }
        Ok(out)
    }
}

/// Pairs of distinct points of `d`, uniform by rejection in the bounding box.
pub fn random_pairs(d: &StarDomain, count: usize, seed: u64) -> Vec<(Point, Point)> {
    let (lo, hi) = d.bounding_box();
    let mut rng = seeded_rng(seed);
    let n = d.dim();
    let draw = |rng: &mut rand_chacha::ChaCha8Rng| loop {
        let mut p = Point::zeros(n);
        for k in 0..n {
            p[k] = lo[k] + (hi[k] - lo[k]) * rng.gen::<f64>();
        }
        if d.inside(&p) {
            return p;
        }
    };
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let x = draw(&mut rng);
        let y = draw(&mut rng);
        if x != y {
            out.push((x, y));
        }
    }
    out
}

fn fd_y(ctx: &KernelContext, x: &Point, y: &Point, h: f64, weight: &dyn Fn(&Point) -> f64) -> Result<Mat> {
    let n = ctx.dim();
    let mut m = Mat::zeros(n);
    for j in 0..n {
        let e = Point::axis(n, j) * h;
        let (yp, ym) = (*y + e, *y - e);
        let col = (ctx.kernel_n(x, &yp)? * weight(&yp) - ctx.kernel_n(x, &ym)? * weight(&ym)) * (0.5 / h);
        for i in 0..n {
            m.set(i, j, col[i]);
        }
    }
    Ok(m)
}

fn fd_x(ctx: &KernelContext, x: &Point, y: &Point, h: f64, weight: &dyn Fn(&Point) -> f64) -> Result<Mat> {
    let n = ctx.dim();
    let mut m = Mat::zeros(n);
    for j in 0..n {
        let e = Point::axis(n, j) * h;
        let (xp, xm) = (*x + e, *x - e);
        let col = (ctx.kernel_n(&xp, y)? * weight(&xp) - ctx.kernel_n(&xm, y)? * weight(&xm)) * (0.5 / h);
        for i in 0..n {
            m.set(i, j, col[i]);
        }
    }
    Ok(m)
}

/// Floor for relative kernel errors: `1e−6` of the bound `B·dⁿ⁻¹⁻ᵖ`.
fn kernel_floor(ctx: &KernelContext, d: f64, power: i32) -> f64 {
    1e-6 * ctx.kernel_bound_constant() * d.powi(-power)
}

pub fn check_outside_vanishing(p: &Problem, count: usize) -> Result<CheckReport> {
    let d = p.domain();
    let c = d.center_ball.center;
    let mut worst = 0.0f64;
    let mut used = 0;
    for (k, u) in boundary_directions(d.dim(), count).into_iter().enumerate() {
        let exit = d.ray_segments(&c, &u, f64::INFINITY)?.last().map_or(0.0, |s| s.1);
        let x = c + u * (exit * 1.02 + 0.05 + 0.5 * (k % 7) as f64 / 7.0);
        if d.inside(&x) {
            continue;
        }
        worst = worst.max(p.potential.v_eval_full(&x)?.norm());
        used += 1;
    }
    let scale = p.field_scale();
    Ok(CheckReport::at_most(
        "outside_vanishing",
        worst / scale,
        p.thresholds.outside_vanishing,
        used,
        "max |v(x)|/max(1,|F|) at exterior points, full integral",
    ))
}

pub fn check_kernel_bound(p: &Problem, pairs: usize) -> Result<CheckReport> {
    let ctx = p.ctx();
    let n = ctx.dim() as i32;
    let bound = ctx.kernel_bound_constant();
    let mut worst = 0.0f64;
    let mut violations = 0;
    for (x, y) in random_pairs(p.domain(), pairs, p.seed ^ 0x4b) {
        let v = ctx.kernel_n(&x, &y)?.norm() * x.dist(&y).powi(n - 1);
        if v > bound {
            violations += 1;
        }
        worst = worst.max(v / bound);
    }
    Ok(CheckReport::at_most(
        "kernel_bound",
        worst,
        p.thresholds.kernel_bound,
        pairs,
        format!("max |N|·|x−y|^(n−1) / ((1+diam)^n max ψ); {violations} violations"),
    ))
}

pub fn check_variant_equivalence(p: &Problem, pairs: usize) -> Result<CheckReport> {
    let ctx = p.ctx();
    let n = ctx.dim() as i32;
    let mut worst = 0.0f64;
    for (x, y) in random_pairs(p.domain(), pairs, p.seed ^ 0x56) {
        let a = ctx.kernel_n(&x, &y)?;
        let floor = kernel_floor(ctx, x.dist(&y), n - 1);
        let scale = a.norm() + floor;
        for b in [ctx.kernel_n_alpha(&x, &y)?, ctx.kernel_n_r(&x, &y)?, ctx.kernel_n_z(&x, &(x - y))?] {
            worst = worst.max((a - b).norm() / scale);
        }
    }
    Ok(CheckReport::at_most(
        "variant_equivalence",
        worst,
        p.thresholds.variant_equivalence,
        pairs,
        "max relative difference of the α, r and z forms against the ξ form",
    ))
}

pub fn check_derivative_identity(p: &Problem, pairs: usize) -> Result<CheckReport> {
    let ctx = p.ctx();
    let n = ctx.dim() as i32;
    let mut worst = 0.0f64;
    let one = |_: &Point| 1.0;
    for (x, y) in random_pairs(p.domain(), pairs, p.seed ^ 0x8) {
        let d = x.dist(&y);
        let h = (1e-3 * d).min(1e-5);
        let dx = ctx.kernel_dn(&x, &y)?;
        let dy = fd_y(ctx, &x, &y, h, &one)?;
        let rhs = ctx.derivative_identity_rhs(&x, &y)?;
        let scale = dx.max_abs().max(dy.max_abs()).max(rhs.max_abs()) + kernel_floor(ctx, d, n);
        worst = worst.max((dx + dy - rhs).max_abs() / scale);
    }
    Ok(CheckReport::at_most(
        "derivative_identity",
        worst,
        p.thresholds.derivative_identity,
        pairs,
        "∂x N + ∂y N (finite differences in y) against the ∂ψ ray integral, relative to the term scale",
    ))
}

pub fn check_mollified_identity(p: &Problem, pairs: usize) -> Result<CheckReport> {
    let ctx = p.ctx();
    let n = ctx.dim() as i32;
    let mut worst = 0.0f64;
    for (x, y) in random_pairs(p.domain(), pairs, p.seed ^ 0x12) {
        let d = x.dist(&y);
        let eps = d / 1.5;
        let h = (1e-3 * d).min(1e-5);
        let wx = move |q: &Point| eta_eval(q.dist(&y) / eps).unwrap_or(0.0);
        let wy = move |q: &Point| eta_eval(x.dist(q) / eps).unwrap_or(0.0);
        let lhs = fd_x(ctx, &x, &y, h, &wx)? + fd_y(ctx, &x, &y, h, &wy)?;
        let rhs = ctx.derivative_identity_rhs(&x, &y)? * eta_eval(d / eps)?;
        let scale = lhs.max_abs().max(rhs.max_abs()) + kernel_floor(ctx, d, n) / eps.min(1.0);
        worst = worst.max((lhs - rhs).max_abs() / scale);
    }
    Ok(CheckReport::at_most(
        "mollified_derivative_identity",
        worst,
        p.thresholds.derivative_identity,
        pairs,
        "∂x[Nη] + ∂y[Nη] by finite differences against η·(x−y)∫∂ψ, with ε = |x−y|/1.5",
    ))
}

pub fn check_singular_structure(p: &Problem, pairs: usize, probes: usize) -> Result<Vec<CheckReport>> {
    let diag = measure_diagnostics(p.ctx(), pairs, probes, p.seed ^ 0x9)?;
    let t = &p.thresholds;
    Ok(vec![
        CheckReport::at_most(
            "k_homogeneity",
            diag.homogeneity_residual,
            t.homogeneity,
            probes,
            "max |k(x,tz) − k(x,z)|, t ∈ {0.1, 1, 7}",
        ),
        CheckReport::at_most(
            "k_sphere_mean",
            diag.sphere_mean_residual,
            t.sphere_mean,
            probes,
            "max entry of ∫_{|z|=1} k(x,z) dσ",
        ),
        CheckReport::at_most(
            "g_decade_ratio",
            diag.g_decade_ratio,
            t.decade_ratio,
            pairs,
            format!("ratio of decade maxima of |G|·|x−y|^(n−1); sup {:.3e}", diag.g_constant),
        ),
        CheckReport::at_most(
            "dn_decade_ratio",
            diag.dn_decade_ratio,
            t.decade_ratio,
            pairs,
            format!("ratio of decade maxima of |∂N|·|x−y|^n; sup {:.3e}", diag.thm9_m),
        ),
    ])
}

pub fn check_divergence(p: &Problem, probes: &[Point]) -> Result<CheckReport> {
    let mean = p.potential.field_integral()?.value;
    let mut worst = 0.0f64;
    for x in probes {
        let target = p.potential.field.eval(x) - psi_eval(p.potential.mollifier(), x) * mean;
        worst = worst.max((p.potential.grad_v(x)?.trace() - target).abs());
    }
    Ok(CheckReport::at_most(
        "divergence_residual",
        worst / p.field_scale(),
        p.thresholds.divergence,
        probes.len(),
        "max |trace ∇v − F + ψ∫F| / max(1,|F|)",
    ))
}

pub fn check_boundary_continuity(p: &Problem, lines: usize) -> Result<CheckReport> {
    let d = p.domain();
    let c = d.center_ball.center;
    let diam = d.diameter();
    let mut far = 0.0f64;
    let mut near = 0.0f64;
    for u in boundary_directions(d.dim(), lines) {
        let exit = d.ray_exit(&c, &u)?;
        let b = c + u * exit;
        for (k, s) in [1e-1, 1e-2, 1e-3, 1e-4].iter().enumerate() {
            let v = p.potential.v_eval(&(b - u * (s * diam)))?.norm();
            if k == 0 {
                far = far.max(v);
            } else if k == 3 {
                near = near.max(v);
            }
        }
    }
    let measured = if near == 0.0 { 0.0 } else { near / far.max(f64::MIN_POSITIVE) };
    Ok(CheckReport::at_most(
        "boundary_continuity",
        measured,
        p.thresholds.boundary_continuity,
        lines,
        "max |v| at distance 1e-4·diam from ∂Ω over max |v| at 1e-1·diam, along rays to the center",
    ))
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct ConvergenceTable {
    pub epsilons: Vec<f64>,
    pub probes: Vec<Point>,
    /// `residuals[k][j]` at `epsilons[k]` and probe `j`; `None` for skipped probes.
    pub residuals: Vec<Vec<Option<f64>>>,
    /// Maximum over probes at each ε.
    pub max_residuals: Vec<f64>,
    pub monotone: bool,
    pub notes: Vec<String>,
}

/// `|div v^ε(x) − F(x) + ψ(x)∫F|` per `ε` and probe.
pub fn convergence_study(p: &PotentialField, schedule: &EpsilonSchedule, probes: &[Point]) -> Result<ConvergenceTable> {
    let eps = schedule.values().to_vec();
    let mean = p.field_integral()?.value;
    let mut notes = Vec::new();
    let mut active = vec![true; probes.len()];
    for (j, x) in probes.iter().enumerate() {
        if !p.domain().contains(x)? {
            notes.push(format!("probe {j} lies outside the domain; skipped"));
            active[j] = false;
        } else if 2.0 * eps[0] >= p.domain().boundary_distance(x)? {
            notes.push(format!("probe {j} is within 2ε of the boundary; skipped"));
            active[j] = false;
        }
    }
    let mut residuals = Vec::with_capacity(eps.len());
    for &e in &eps {
        let row = probes
            .par_iter()
            .zip(&active)
            .map(|(x, &on)| {
                if !on {
                    return Ok(None);
                }
                let target = p.field.eval(x) - psi_eval(p.mollifier(), x) * mean;
                Ok(Some((p.div_v_eps(x, e)? - target).abs()))
            })
            .collect::<Result<Vec<_>>>()?;
        residuals.push(row);
    }
    let max_residuals: Vec<f64> =
        residuals.iter().map(|r| r.iter().flatten().fold(0.0, |a: f64, b| a.max(*b))).collect();
    let monotone = max_residuals.windows(2).all(|w| w[1] <= w[0] || w[1] <= 1e-14);
    Ok(ConvergenceTable { epsilons: eps, probes: probes.to_vec(), residuals, max_residuals, monotone, notes })
}

pub fn check_convergence(p: &Problem, probes: &[Point]) -> Result<CheckReport> {
    let t = convergence_study(&p.potential, &p.schedule, probes)?;
    let last = *t.max_residuals.last().unwrap_or(&0.0) / p.field_scale();
    let mut r = CheckReport::at_most(
        "epsilon_convergence",
        last,
        p.thresholds.convergence,
        probes.len(),
        format!("residual at smallest ε / max(1,|F|); monotone: {}", t.monotone),
    );
    r.passed &= t.monotone;
    Ok(r)
}

type Job<'a> = Box<dyn Fn() -> Result<Vec<CheckReport>> + Send + Sync + 'a>;

/// Runs every check; reports are sorted by name.
pub fn check_suite(p: &Problem, level: Level) -> Vec<CheckReport> {
    let pairs = level.pairs();
    let n_probes = level.probes();
    let th = p.thresholds.clone();
    let exterior = match level {
        Level::Quick => 20,
        Level::Full => 200,
    };
    let lines = match level {
        Level::Quick => 8,
        Level::Full => 20,
    };
    let one = |r: Result<CheckReport>| r.map(|c| vec![c]);
    let jobs: Vec<(&str, f64, Job)> = vec![
        ("outside_vanishing", th.outside_vanishing, Box::new(move || one(check_outside_vanishing(p, exterior)))),
        ("kernel_bound", th.kernel_bound, Box::new(move || one(check_kernel_bound(p, pairs)))),
        ("variant_equivalence", th.variant_equivalence, Box::new(move || one(check_variant_equivalence(p, pairs)))),
        ("derivative_identity", th.derivative_identity, Box::new(move || one(check_derivative_identity(p, pairs)))),
        (
            "mollified_derivative_identity",
            th.derivative_identity,
            Box::new(move || one(check_mollified_identity(p, pairs))),
        ),
        ("singular_structure", th.sphere_mean, Box::new(move || check_singular_structure(p, pairs, n_probes.max(5)))),
        ("divergence_residual", th.divergence, Box::new(move || one(check_divergence(p, &p.probes(n_probes)?)))),
        ("boundary_continuity", th.boundary_continuity, Box::new(move || one(check_boundary_continuity(p, lines)))),
        ("epsilon_convergence", th.convergence, Box::new(move || one(check_convergence(p, &p.probes(n_probes)?)))),
    ];
    let mut out: Vec<CheckReport> = jobs
        .par_iter()
        .flat_map(|(name, threshold, job)| match job() {
            Ok(v) => v,
            Err(e) => vec![CheckReport::failed(name, *threshold, &e)],
        })
        .collect();
    out.sort_by(|a, b| a.name.cmp(&b.name));
    out
}

/// The suite on the kernel with `K` missing its `∂ψ` term.
pub fn mutation_suite(p: &Problem, level: Level) -> Vec<CheckReport> {
    check_suite(&p.clone().with_mutation(KernelMutation::DropGradTermInK), level)
}
