//! Problem files.

use anyhow::{anyhow, bail, Context, Result};
use serde::Deserialize;
use serde_json::Value;

use bgk::dini::DiniConfig;
use bgk::fieldlang;
use bgk::geometry::{verify_star_shaped, Ball, Overlap, RadialProfile, StarDomain, UnionDomain};
use bgk::potential::{default_big_ball, EpsilonSchedule, PotentialField, ScalarField, STAR_GATE_SAMPLES};
use bgk::quadrature::QuadConfig;
use bgk::verify::{Problem, Thresholds};
use bgk::Point;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BallSpec {
    pub center: Vec<f64>,
    pub radius: f64,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum DomainSpec {
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    /// `profile` is an expression in the unit direction `(x1, x2[, x3])`.
    Radial {
        center: Vec<f64>,
        profile: String,
    },
}

#[derive(Debug, Deserialize)]
pub struct PieceSpec {
    #[serde(flatten)]
    pub domain: DomainSpec,
    pub center_ball: BallSpec,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverlapSpec {
    pub i: usize,
    pub ball: BallSpec,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub domain: Option<DomainSpec>,
    pub center_ball: Option<BallSpec>,
    pub pieces: Option<Vec<PieceSpec>>,
    pub overlaps: Option<Vec<OverlapSpec>>,
    #[serde(rename = "F")]
    pub f: String,
    pub quad: Option<Value>,
    pub epsilon_schedule: Option<Vec<f64>>,
    #[serde(rename = "BR_factor")]
    pub br_factor: Option<f64>,
    pub seed: Option<u64>,
    pub thresholds: Option<Thresholds>,
    pub dini: Option<DiniConfig>,
}

pub enum Geometry {
    Single(StarDomain),
    Union(UnionDomain),
}

/// A validated problem.
pub struct Loaded {
    pub dim: usize,
    pub geometry: Geometry,
    pub field: ScalarField,
    pub quad: QuadConfig,
    pub schedule: EpsilonSchedule,
    pub br_factor: f64,
    pub seed: u64,
    pub thresholds: Thresholds,
    pub dini: DiniConfig,
}

fn point(v: &[f64], dim: usize, what: &str) -> Result<Point> {
    if v.len() != dim {
        bail!("{what} has {} coordinates, expected {dim}", v.len());
    }
    Ok(Point::new(v)?)
}

fn ball(b: &BallSpec, dim: usize, what: &str) -> Result<Ball> {
    Ok(Ball::new(point(&b.center, dim, what)?, b.radius)?)
}

fn domain(d: &DomainSpec, cb: Ball, dim: usize) -> Result<StarDomain> {
    Ok(match d {
        DomainSpec::Ball { center, radius } => StarDomain::ball(point(center, dim, "domain center")?, *radius, cb)?,
        DomainSpec::Box { lo, hi } => StarDomain::axis_box(point(lo, dim, "box lo")?, point(hi, dim, "box hi")?, cb)?,
        DomainSpec::Radial { center, profile } => {
            let e = fieldlang::parse(profile).map_err(|e| anyhow!("profile: {e}"))?;
            if e.max_var() > dim {
                bail!("profile uses x{} in dimension {dim}", e.max_var());
            }
            let p = RadialProfile::new(profile.clone(), move |u: &Point| e.eval_raw(u));
            StarDomain::radial(point(center, dim, "domain center")?, p, cb)?
        }
    })
}

/// Overlays the keys of `over` onto the defaults for `dim`.
fn quad_config(over: Option<&Value>, dim: usize) -> Result<QuadConfig> {
    let mut base = serde_json::to_value(QuadConfig::for_dim(dim))?;
    if let Some(o) = over {
        let Value::Object(m) = o else { bail!("\"quad\" must be an object") };
        for (k, v) in m {
            if base.get(k).is_none() {
                bail!("unknown quad key \"{k}\"");
            }
            base[k] = v.clone();
        }
    }
    let q: QuadConfig = serde_json::from_value(base)?;
    q.validate()?;
    Ok(q)
}

pub fn parse_spec(text: &str) -> Result<ProblemSpec> {
    serde_json::from_str(text).context("problem file is not a valid problem description")
}

impl ProblemSpec {
    pub fn load(&self) -> Result<Loaded> {
        let dim = match (&self.center_ball, &self.pieces) {
            (Some(b), None) => b.center.len(),
            (None, Some(p)) if !p.is_empty() => p[0].center_ball.center.len(),
            (Some(_), Some(_)) => bail!("give either \"domain\"/\"center_ball\" or \"pieces\", not both"),
            _ => bail!("missing \"center_ball\" (or \"pieces\" for a union)"),
        };
        if !(2..=3).contains(&dim) {
            bail!("only dimensions 2 and 3 are supported, got {dim}");
        }
        let geometry = match (&self.domain, &self.pieces) {
            (Some(d), None) => {
                let cb = ball(self.center_ball.as_ref().expect("checked above"), dim, "center_ball center")?;
                Geometry::Single(domain(d, cb, dim)?)
            }
            (None, Some(ps)) => {
                let pieces = ps
                    .iter()
                    .map(|p| domain(&p.domain, ball(&p.center_ball, dim, "piece center_ball")?, dim))
                    .collect::<Result<Vec<_>>>()?;
                let overlaps = self
                    .overlaps
                    .iter()
                    .flatten()
                    .map(|o| Ok(Overlap { i: o.i, ball: ball(&o.ball, dim, "overlap ball")? }))
                    .collect::<Result<Vec<_>>>()?;
                Geometry::Union(UnionDomain::new(pieces, overlaps)?)
            }
            (None, None) => bail!("missing \"domain\""),
            (Some(_), Some(_)) => bail!("give either \"domain\" or \"pieces\", not both"),
        };
        let field = fieldlang::field(&self.f, dim).map_err(|e| anyhow!("F: {e}"))?;
        let schedule = match &self.epsilon_schedule {
            Some(v) => EpsilonSchedule::new(v.clone())?,
            None => EpsilonSchedule::default(),
        };
        let br_factor = self.br_factor.unwrap_or(1.25);
        if !(br_factor >= 1.0) {
            bail!("BR_factor must be at least 1");
        }
        Ok(Loaded {
            dim,
            geometry,
            field,
            quad: quad_config(self.quad.as_ref(), dim)?,
            schedule,
            br_factor,
            seed: self.seed.unwrap_or(0),
            thresholds: self.thresholds.clone().unwrap_or_default(),
            dini: self.dini.clone().unwrap_or_default(),
        })
    }
}

/// Geometry gate failure; reported with exit code 2.
#[derive(Debug)]
pub struct GateFailure(pub String);

impl std::fmt::Display for GateFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for GateFailure {}

pub fn star_gate(d: &StarDomain, label: &str) -> Result<()> {
    let r = verify_star_shaped(d, &d.center_ball, STAR_GATE_SAMPLES)?;
    if !r.ok {
        let (y, z) = r.worst_pair.expect("failed report carries a witness");
        return Err(GateFailure(format!(
            "{label} is not star-shaped with respect to its center ball: segment {:?} -> {:?} leaves it ({} samples)",
            y.as_slice(),
            z.as_slice(),
            r.samples
        ))
        .into());
    }
    Ok(())
}

impl Loaded {
    pub fn potential_for(&self, d: &StarDomain, field: ScalarField) -> Result<PotentialField> {
        let ctx = bgk::kernel::KernelContext::for_domain(d.clone())?;
        let pf = PotentialField::new(ctx, field, self.quad.clone())?;
        Ok(pf.with_big_ball(default_big_ball(d, self.br_factor))?)
    }

    pub fn problem_for(&self, d: &StarDomain, field: ScalarField) -> Result<Problem> {
        let mut p = Problem::new(self.potential_for(d, field)?);
        p.schedule = self.schedule.clone();
        p.thresholds = self.thresholds.clone();
        p.seed = self.seed;
        Ok(p)
    }
}
