#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod output;
mod spec;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use bgk::decomposition::{build_partition, localize, solve_union};
use bgk::dini;
use bgk::kernel::measure_diagnostics;
use bgk::potential::{EpsilonSchedule, VectorPotential};
use bgk::verify::{check_suite, convergence_study, mutation_suite, CheckReport, Level};
use bgk::Point;

use output::{json, num, Csv};
use spec::{parse_spec, star_gate, GateFailure, Geometry, Loaded};

const AFTER_HELP: &str = "\
Field expressions use + - * / ^, sin cos exp log sqrt abs, x1 x2 x3, r = |x| and pi.
^ is right-associative and binds tighter than unary minus: -2^2 = -4, 2^3^2 = 512.

Exit codes: 0 success, 1 a check failed, 2 bad input or geometry.
BGK_THREADS caps the number of worker threads.";

#[derive(Parser)]
#[command(name = "bgk", version, about = "Solve div v = F with the Bogovskii formula", after_help = AFTER_HELP)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone, Copy)]
struct Format {
    /// Emit JSON.
    #[arg(long, conflicts_with = "csv")]
    json: bool,
    /// Emit CSV.
    #[arg(long)]
    csv: bool,
}

impl Format {
    fn csv_or(self, default_csv: bool) -> bool {
        if self.json {
            false
        } else if self.csv {
            true
        } else {
            default_csv
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum LevelArg {
    Quick,
    Full,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate v and div v at points or on a grid.
    Solve {
        spec: PathBuf,
        /// Points as "x1,x2;x1,x2;...".
        #[arg(long, conflicts_with = "grid")]
        points: Option<String>,
        /// "grid:NxN[:margin]" over the bounding box enlarged by margin (default 0.1) on each side.
        #[arg(long)]
        grid: Option<String>,
        #[command(flatten)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the identity checks; exit 1 if any fails.
    Verify {
        spec: PathBuf,
        #[arg(long, value_enum, default_value = "quick")]
        level: LevelArg,
        /// Debug: drop the gradient term from the kernel part K.
        #[arg(long, hide = true)]
        corrupt_kernel: bool,
        #[command(flatten)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate |div v^eps - F + psi*int F| along an epsilon schedule.
    Convergence {
        spec: PathBuf,
        /// Decreasing cutoffs "e1,e2,...".
        #[arg(long)]
        schedule: Option<String>,
        /// Probe points "x1,x2;...".
        #[arg(long)]
        probes: Option<String>,
        #[command(flatten)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate the modulus of continuity, the Dini integral and the C_D norm of F.
    Dini {
        spec: PathBuf,
        #[arg(long)]
        pairs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Measure the kernel constants on the problem's domain.
    KernelCheck {
        spec: PathBuf,
        #[arg(long, default_value_t = 1000)]
        pairs: usize,
        #[arg(long, default_value_t = 5)]
        probes: usize,
        #[command(flatten)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(path: &Path) -> Result<Loaded> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_spec(&text)?.load()
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn parse_points(s: &str, dim: usize) -> Result<Vec<Point>> {
    s.split(';')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            let v = t.split(',').map(|c| c.trim().parse::<f64>()).collect::<std::result::Result<Vec<_>, _>>()?;
            if v.len() != dim {
                bail!("point \"{t}\" has {} coordinates, expected {dim}", v.len());
            }
            Ok(Point::new(&v)?)
        })
        .collect()
}

fn parse_grid(s: &str, lo: &Point, hi: &Point) -> Result<Vec<Point>> {
    let dim = lo.dim();
    let rest = s.strip_prefix("grid:").context("grid must look like grid:NxN[:margin]")?;
    let (counts, margin) = match rest.split_once(':') {
        Some((c, m)) => (c, m.parse::<f64>().context("grid margin")?),
        None => (rest, 0.1),
    };
    let ns = counts.split('x').map(|c| c.parse::<usize>()).collect::<std::result::Result<Vec<_>, _>>()?;
    if ns.len() != dim || ns.iter().any(|&n| n < 2) {
        bail!("grid needs {dim} counts of at least 2, e.g. grid:21x21");
    }
    let mut pts = vec![Point::zeros(dim)];
    for k in 0..dim {
        let w = hi[k] - lo[k];
        let (a, b) = (lo[k] - margin * w, hi[k] + margin * w);
        pts = pts
            .into_iter()
            .flat_map(|p| {
                let m = ns[k];
                (0..m).map(move |i| {
                    let mut q = p;
                    q[k] = a + (b - a) * i as f64 / (m - 1) as f64;
                    q
                })
            })
            .collect();
    }
    Ok(pts)
}

#[derive(Serialize)]
struct SolveRow {
    x: Point,
    v: Point,
    div: f64,
    #[serde(rename = "F")]
    f: f64,
    inside: bool,
}

fn cmd_solve(spec: &Path, points: Option<String>, grid: Option<String>, format: Format) -> Result<String> {
    let l = load(spec)?;
    let solver: Box<dyn VectorPotential> = match &l.geometry {
        Geometry::Single(d) => {
            star_gate(d, "domain")?;
            let pf = l.potential_for(d, l.field.clone())?;
            let mean = pf.field_integral()?.value;
            if mean.abs() > 1e-6 * d.measure().unwrap_or(1.0).max(1.0) {
                eprintln!("warning: F has mean {mean:.6e}; the solution satisfies div v = F - psi*mean");
            }
            Box::new(pf)
        }
        Geometry::Union(u) => {
            for (k, p) in u.pieces.iter().enumerate() {
                star_gate(p, &format!("piece {k}"))?;
            }
            Box::new(solve_union(&l.field, u, &l.quad)?)
        }
    };
    let pts = match (points, grid) {
        (Some(p), _) => parse_points(&p, l.dim)?,
        (None, Some(g)) => {
            let (lo, hi) = match &l.geometry {
                Geometry::Single(d) => d.bounding_box(),
                Geometry::Union(u) => u.bounding_box(),
            };
            parse_grid(&g, &lo, &hi)?
        }
        (None, None) => bail!("give --points or --grid"),
    };
    let rows = pts
        .par_iter()
        .map(|x| {
            let inside = solver.inside(x);
            let v = solver.v(x)?;
            let (div, f) = if inside {
                (solver.grad(x).map(|g| g.trace()).unwrap_or(f64::NAN), l.field.eval(x))
            } else {
                (0.0, 0.0)
            };
            Ok(SolveRow { x: *x, v, div, f, inside })
        })
        .collect::<Result<Vec<_>>>()?;
    if !format.csv_or(true) {
        return json(&rows);
    }
    let mut header: Vec<String> = (1..=l.dim).map(|k| format!("x{k}")).collect();
    header.extend((1..=l.dim).map(|k| format!("v{k}")));
    header.extend(["div".to_string(), "F".to_string()]);
    let mut csv = Csv::new(&header.iter().map(String::as_str).collect::<Vec<_>>());
    for r in &rows {
        let mut cells: Vec<String> = r.x.as_slice().iter().map(|v| num(*v)).collect();
        cells.extend(r.v.as_slice().iter().map(|v| num(*v)));
        cells.push(num(r.div));
        cells.push(num(r.f));
        csv.row(&cells);
    }
    Ok(csv.finish())
}

fn cmd_verify(spec: &Path, level: LevelArg, corrupt: bool, format: Format) -> Result<(String, bool)> {
    let l = load(spec)?;
    let level = match level {
        LevelArg::Quick => Level::Quick,
        LevelArg::Full => Level::Full,
    };
    let run = |p: &bgk::verify::Problem| if corrupt { mutation_suite(p, level) } else { check_suite(p, level) };
    let reports: Vec<CheckReport> = match &l.geometry {
        Geometry::Single(d) => {
            star_gate(d, "domain")?;
            run(&l.problem_for(d, l.field.clone())?)
        }
        Geometry::Union(u) => {
            let part = build_partition(u)?;
            let loc = localize(&l.field, u, &part, &l.quad)?;
            let mut all = Vec::new();
            for (k, (piece, fk)) in u.pieces.iter().zip(&loc.fields).enumerate() {
                star_gate(piece, &format!("piece {k}"))?;
                for mut r in run(&l.problem_for(piece, fk.clone())?) {
                    r.name = format!("piece{k}.{}", r.name);
                    all.push(r);
                }
            }
            all
        }
    };
    let ok = reports.iter().all(|r| r.passed);
    for r in reports.iter().filter(|r| !r.passed) {
        eprintln!("FAILED {}: measured {:.6e}, threshold {:.6e}", r.name, r.measured, r.threshold);
    }
    let text = if format.csv_or(false) {
        let mut csv = Csv::new(&["name", "passed", "measured", "threshold", "samples"]);
        for r in &reports {
            csv.row(&[r.name.clone(), r.passed.to_string(), num(r.measured), num(r.threshold), r.samples.to_string()]);
        }
        csv.finish()
    } else {
        json(&reports)?
    };
    Ok((text, ok))
}

fn single(l: &Loaded, what: &str) -> Result<bgk::geometry::StarDomain> {
    match &l.geometry {
        Geometry::Single(d) => Ok(d.clone()),
        Geometry::Union(_) => bail!("{what} needs a single star-shaped domain"),
    }
}

fn cmd_convergence(spec: &Path, schedule: Option<String>, probes: Option<String>, format: Format) -> Result<String> {
    let l = load(spec)?;
    let d = single(&l, "convergence")?;
    star_gate(&d, "domain")?;
    let mut p = l.problem_for(&d, l.field.clone())?;
    if let Some(s) = schedule {
        let v = s
            .split(',')
            .filter(|t| !t.trim().is_empty())
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .context("schedule must be comma-separated numbers")?;
        p.schedule = EpsilonSchedule::new(v)?;
    }
    let probes = match probes {
        Some(s) => parse_points(&s, l.dim)?,
        None => p.probes(3)?,
    };
    let t = convergence_study(&p.potential, &p.schedule, &probes)?;
    for n in &t.notes {
        eprintln!("note: {n}");
    }
    if !format.csv_or(true) {
        return json(&t);
    }
    let mut csv = Csv::new(&["epsilon", "probe_index", "residual"]);
    for (e, row) in t.epsilons.iter().zip(&t.residuals) {
        for (j, r) in row.iter().enumerate() {
            if let Some(r) = r {
                csv.row(&[num(*e), j.to_string(), num(*r)]);
            }
        }
    }
    Ok(csv.finish())
}

fn cmd_dini(spec: &Path, pairs: Option<usize>, seed: Option<u64>, format: Format) -> Result<String> {
    let l = load(spec)?;
    let d = single(&l, "dini")?;
    let mut cfg = l.dini.clone();
    if let Some(n) = pairs {
        cfg.n_pairs = n;
    }
    cfg.seed = seed.unwrap_or(cfg.seed);
    let rep = dini::analyze(&l.field, &d, &cfg)?;
    if !format.csv_or(false) {
        return json(&rep);
    }
    let mut csv = Csv::new(&["rho", "omega"]);
    for (r, w) in rep.modulus.rhos.iter().zip(&rep.modulus.omegas) {
        csv.row(&[num(*r), num(*w)]);
    }
    Ok(csv.finish())
}

fn cmd_kernel_check(spec: &Path, pairs: usize, probes: usize, format: Format) -> Result<String> {
    let l = load(spec)?;
    let d = single(&l, "kernel-check")?;
    let ctx = bgk::kernel::KernelContext::for_domain(d)?;
    let diag = measure_diagnostics(&ctx, pairs, probes, l.seed)?;
    if !format.csv_or(false) {
        return json(&diag);
    }
    let mut csv = Csv::new(&["quantity", "value"]);
    for (k, v) in [
        ("lemma4_constant", diag.lemma4_constant),
        ("kernel_bound_constant", ctx.kernel_bound_constant()),
        ("thm9_M", diag.thm9_m),
        ("g_constant", diag.g_constant),
        ("sphere_mean_residual", diag.sphere_mean_residual),
        ("homogeneity_residual", diag.homogeneity_residual),
        ("g_decade_ratio", diag.g_decade_ratio),
        ("dn_decade_ratio", diag.dn_decade_ratio),
    ] {
        csv.row(&[k.to_string(), num(v)]);
    }
    Ok(csv.finish())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.cmd {
        Cmd::Solve { spec, points, grid, format, out } => emit(&out, &cmd_solve(&spec, points, grid, format)?)?,
        Cmd::Verify { spec, level, corrupt_kernel, format, out } => {
            let (text, ok) = cmd_verify(&spec, level, corrupt_kernel, format)?;
            emit(&out, &text)?;
            return Ok(ok);
        }
        Cmd::Convergence { spec, schedule, probes, format, out } => {
            emit(&out, &cmd_convergence(&spec, schedule, probes, format)?)?
        }
        Cmd::Dini { spec, pairs, seed, format, out } => emit(&out, &cmd_dini(&spec, pairs, seed, format)?)?,
        Cmd::KernelCheck { spec, pairs, probes, format, out } => {
            emit(&out, &cmd_kernel_check(&spec, pairs, probes, format)?)?
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("BGK_THREADS").ok().and_then(|s| s.parse::<usize>().ok()).filter(|&n| n > 0) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            if let Some(g) = e.downcast_ref::<GateFailure>() {
                eprintln!("geometry check failed: {g}");
            } else {
                eprintln!("error: {e:#}");
            }
            ExitCode::from(2)
        }
    }
}
