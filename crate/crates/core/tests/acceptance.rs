//! Acceptance criteria. Runs without the libtest harness and prints one line
//! per criterion; exits nonzero if any fails.

#[path = "common/golden.rs"]
mod golden;

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use bgk::decomposition::{build_partition, localize, solve_union};
use bgk::geometry::{Ball, Overlap, StarDomain, UnionDomain};
use bgk::kernel::measure_diagnostics;
use bgk::potential::{scaled_solve, EpsilonSchedule, PotentialField, ScalarField, VectorPotential};
use bgk::quadrature::{integrate_polar, QuadConfig};
use bgk::verify::{
    check_derivative_identity, check_kernel_bound, check_mollified_identity, check_variant_equivalence,
    convergence_study, mutation_suite, Level, Problem,
};
use bgk::{Point, Result};

type Criterion = fn() -> Result<Outcome>;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Result<Outcome> {
    Ok(Outcome { passed, detail: detail.into() })
}

fn p2(x: f64, y: f64) -> Point {
    Point::from_slice(&[x, y])
}

fn disk(r: f64, b: f64) -> StarDomain {
    let o = Point::zeros(2);
    StarDomain::ball(o, r, Ball::new(o, b).unwrap()).unwrap()
}

/// `div[(4 − |x|²)² (sin x₂, cos x₁) / 16]`.
fn manufactured() -> ScalarField {
    ScalarField::new("manufactured", |x: &Point| -(4.0 - x.norm_sq()) * (x[0] * x[1].sin() + x[1] * x[0].cos()) / 4.0)
}

fn problem() -> Problem {
    Problem::new(PotentialField::for_domain(disk(2.0, 1.0), manufactured()).unwrap())
}

fn probes() -> Vec<Point> {
    vec![p2(0.3, 0.2), p2(-0.4, 0.1), p2(0.1, -0.5)]
}

fn outside_vanishing() -> Result<Outcome> {
    let pf = PotentialField::for_domain(disk(2.0, 1.0), manufactured())?;
    let mut worst = 0.0f64;
    for k in 0..200 {
        let t = 2.0 * PI * k as f64 / 200.0 + 0.1;
        let r = 2.0 + 0.01 + 3.0 * (k % 10) as f64 / 10.0;
        worst = worst.max(pf.v_eval_full(&p2(r * t.cos(), r * t.sin()))?.max_abs());
    }
    outcome(worst <= 1e-8, format!("max |v| = {worst:.2e} at 200 exterior points (≤ 1e-8)"))
}

fn kernel_bound() -> Result<Outcome> {
    let r = check_kernel_bound(&problem(), 10_000)?;
    outcome(r.measured <= 1.0, format!("max |N||x−y|^(n−1)/bound = {:.3} over 10⁴ pairs; {}", r.measured, r.notes))
}

fn variant_equivalence() -> Result<Outcome> {
    let r = check_variant_equivalence(&problem(), 1000)?;
    outcome(r.measured <= 1e-8, format!("max rel diff = {:.2e} over 10³ pairs (≤ 1e-8)", r.measured))
}

fn derivative_identities() -> Result<Outcome> {
    let p = problem();
    let a = check_derivative_identity(&p, 100)?;
    let b = check_mollified_identity(&p, 100)?;
    outcome(
        a.measured <= 1e-4 && b.measured <= 1e-4,
        format!("rel err {:.2e} (∂N), {:.2e} (∂[Nη]) over 10² pairs (≤ 1e-4)", a.measured, b.measured),
    )
}

fn singular_kernel() -> Result<Outcome> {
    let p = problem();
    let d = measure_diagnostics(&p.potential.ctx, 10_000, 5, 9)?;
    let ok = d.homogeneity_residual <= 1e-8
        && d.sphere_mean_residual <= 1e-6
        && d.g_decade_ratio <= 2.0
        && d.dn_decade_ratio <= 2.0;
    outcome(
        ok,
        format!(
            "homogeneity {:.1e}, sphere mean {:.1e}, decade ratios {:.2} (G) {:.2} (∂N)",
            d.homogeneity_residual, d.sphere_mean_residual, d.g_decade_ratio, d.dn_decade_ratio
        ),
    )
}

fn divergence_limit() -> Result<Outcome> {
    let schedule = EpsilonSchedule::new(vec![1e-1, 3e-2, 1e-2, 3e-3, 1e-3])?;
    let mut ok = true;
    let mut detail = Vec::new();
    for (label, f) in [("x1", ScalarField::new("x1", |x| x[0])), ("1", ScalarField::constant(1.0))] {
        let pf = PotentialField::for_domain(disk(2.0, 1.0), f)?;
        let t = convergence_study(&pf, &schedule, &probes())?;
        let per_probe_monotone = (0..3).all(|j| {
            t.residuals.windows(2).all(|w| match (w[0][j], w[1][j]) {
                (Some(a), Some(b)) => b < a,
                _ => false,
            })
        });
        let last = *t.max_residuals.last().unwrap();
        ok &= per_probe_monotone && last <= 1e-2;
        detail.push(format!("F={label}: monotone {per_probe_monotone}, final {last:.2e}"));
    }
    outcome(ok, format!("{} (≤ 1e-2)", detail.join("; ")))
}

fn derivative_representation() -> Result<Outcome> {
    let f = manufactured();
    let pf = PotentialField::for_domain(disk(2.0, 1.0), f.clone())?;
    let pts: Vec<Point> = (0..25).map(|k| p2(-1.2 + 0.6 * (k % 5) as f64, -1.2 + 0.6 * (k / 5) as f64)).collect();
    let fmax = pts.iter().map(|x| f.eval(x).abs()).fold(0.0, f64::max);
    let (mut trace_err, mut fd_err) = (0.0f64, 0.0f64);
    let h = 1e-4;
    for x in &pts {
        let g = pf.grad_v(x)?;
        let fx = f.eval(x);
        trace_err = trace_err.max((g.trace() - fx).abs() / fx.abs().max(1e-2 * fmax));
        for j in 0..2 {
            let e = Point::axis(2, j) * h;
            let c = (pf.v_eval(&(*x + e))? - pf.v_eval(&(*x - e))?) * (0.5 / h);
            for i in 0..2 {
                fd_err = fd_err.max((c[i] - g.get(i, j)).abs() / g.max_abs().max(1e-12));
            }
        }
    }
    outcome(
        trace_err <= 1e-2 && fd_err <= 1e-2,
        format!("5×5 grid: trace rel err {trace_err:.2e}, FD rel err {fd_err:.2e} (≤ 1e-2)"),
    )
}

fn scaling() -> Result<Outcome> {
    let o = Point::zeros(2);
    let b = Ball::new(o, 2.0)?;
    let d = StarDomain::ball(o, 4.0, b)?;
    let f = ScalarField::new("x1*x2 + sin(x1)", |x| x[0] * x[1] + x[0].sin());
    let direct = PotentialField::for_domain(d.clone(), f.clone())?;
    let scaled = scaled_solve(&f, &d, &b, QuadConfig::for_dim(2))?;
    let mut worst = 0.0f64;
    for k in 0..50 {
        let t = 2.0 * PI * k as f64 / 50.0 * 3.0;
        let r = 3.9 * (k as f64 + 0.5) / 50.0;
        let x = p2(r * t.cos(), r * t.sin());
        worst = worst.max((direct.v_eval(&x)? - scaled.v(&x)?).max_abs());
    }
    outcome(worst <= 1e-8, format!("max |v − 2w(x/2)| = {worst:.2e} at 50 points (≤ 1e-8)"))
}

fn decomposition() -> Result<Outcome> {
    const R: f64 = 1.2;
    const C: f64 = 0.8;
    let piece = |cx: f64| StarDomain::ball(p2(cx, 0.0), R, Ball::new(p2(cx, 0.0), 0.6).unwrap()).unwrap();
    let u = UnionDomain::new(vec![piece(-C), piece(C)], vec![Overlap { i: 0, ball: Ball::new(p2(0.0, 0.0), 0.3)? }])?;
    let f = ScalarField::new("manufactured", |x: &Point| {
        let a = (x[0] + C).powi(2) + x[1] * x[1] - R * R;
        let b = (x[0] - C).powi(2) + x[1] * x[1] - R * R;
        let d1 = 2.0 * (x[0] + C) * b + 2.0 * (x[0] - C) * a;
        let d2 = 2.0 * x[1] * (a + b);
        d1 * x[1].sin() + d2 * x[0].cos()
    });
    let q = QuadConfig::for_dim(2);
    let loc = localize(&f, &u, &build_partition(&u)?, &q)?;
    let grid = |m: usize| -> Vec<Point> {
        let (lo, hi) = u.bounding_box();
        let mut out = Vec::new();
        for i in 0..m {
            for j in 0..m {
                let x = p2(
                    lo[0] + (hi[0] - lo[0]) * (i as f64 + 0.5) / m as f64,
                    lo[1] + (hi[1] - lo[1]) * (j as f64 + 0.5) / m as f64,
                );
                if u.inside(&x) {
                    out.push(x);
                }
            }
        }
        out
    };
    let sum_err = grid(32)
        .iter()
        .map(|x| (loc.fields.iter().map(|g| g.eval(x)).sum::<f64>() - f.eval(x)).abs())
        .fold(0.0, f64::max);
    let mut mean_err = 0.0f64;
    for (k, piece) in u.pieces.iter().enumerate() {
        let m = integrate_polar(|y| loc.fields[k].eval(y), &piece.center_ball.center, piece, &q)?;
        mean_err = mean_err.max(m.value.abs());
    }
    let sol = solve_union(&f, &u, &q)?;
    let mut residual = 0.0f64;
    for x in grid(7) {
        residual = residual.max((sol.grad(&x)?.trace() - f.eval(&x)).abs() / f.eval(&x).abs().max(1.0));
    }
    let mut decays = true;
    let mut lines = 0;
    for k in 0..40 {
        if lines == 20 {
            break;
        }
        let t = 2.0 * PI * (k as f64 + 0.5) / 40.0;
        let nu = p2(t.cos(), t.sin());
        let cx = if t.cos() < 0.0 { -C } else { C };
        let b = p2(cx, 0.0) + nu * R;
        if u.pieces.iter().filter(|q| q.inside(&(b - nu * 1e-6))).count() != 1 {
            continue;
        }
        lines += 1;
        let vals: Vec<f64> =
            [1e-1, 1e-2, 1e-3, 1e-4].iter().map(|s| sol.v(&(b - nu * *s)).map(|v| v.norm())).collect::<Result<_>>()?;
        decays &= vals[3] < vals[0] && vals[3] < 1e-3;
    }
    let ok = sum_err <= 1e-10 && mean_err <= 1e-6 && residual <= 1e-2 && decays && lines == 20;
    outcome(
        ok,
        format!(
            "|ΣFᵢ − F| {sum_err:.1e}, |∫Fᵢ| {mean_err:.1e}, residual {residual:.1e}, decay on {lines} lines: {decays}"
        ),
    )
}

fn mutation() -> Result<Outcome> {
    let rs = mutation_suite(&problem(), Level::Quick);
    let failed = |name: &str| rs.iter().find(|r| r.name == name).is_some_and(|r| !r.passed);
    // The ∂[Nη] identity is checked by differencing N itself, so K does not enter it.
    let (a, b) = (failed("k_sphere_mean"), failed("derivative_identity"));
    outcome(a && b, format!("mutated kernel fails sphere mean: {a}, ∂N identity: {b}"))
}

fn golden_file() -> Result<Outcome> {
    let n = golden::golden_cases().len();
    let bad = golden::golden_failures();
    let tail = if bad.is_empty() { String::new() } else { format!("; failing: {bad:?}") };
    outcome(n == 50 && bad.is_empty(), format!("{} of {n} cases match{tail}", n - bad.len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, Criterion); 11] = [
        ("outside vanishing", outside_vanishing),
        ("kernel bound", kernel_bound),
        ("variant equivalence", variant_equivalence),
        ("derivative identities", derivative_identities),
        ("singular kernel structure", singular_kernel),
        ("divergence limit", divergence_limit),
        ("derivative representation", derivative_representation),
        ("scaling", scaling),
        ("decomposition", decomposition),
        ("mutation sensitivity", mutation),
        ("fieldlang golden file", golden_file),
    ];
    let mut all = true;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (passed, detail) = match run() {
            Ok(o) => (o.passed, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        all &= passed;
        println!(
            "criterion {:>2} {:<26} {}  {}  [{:.1}s]",
            k + 1,
            name,
            if passed { "PASS" } else { "FAIL" },
            detail,
            start.elapsed().as_secs_f64()
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
