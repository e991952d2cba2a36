//! Balls, star-shaped domains and unions of them.
//!
//! A [`StarDomain`] is one of three constructive shapes (ball, axis box, or a
//! radial function about a center) together with the ball `B` with respect to
//! whose closure it is star-shaped. Star-shapedness itself cannot be decided
//! exactly for radial shapes; [`verify_star_shaped`] checks it by sampling.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{BgkError, Result};
use crate::point::Point;
use crate::sampling::Halton;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ball {
    pub center: Point,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(BgkError::InvalidGeometry(format!("ball radius must be positive, got {radius}")));
        }
        if !center.is_finite() {
            return Err(BgkError::InvalidGeometry("ball center must be finite".into()));
        }
        Ok(Self { center, radius })
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    #[inline]
    pub fn contains(&self, x: &Point) -> bool {
        (*x - self.center).norm_sq() < self.radius * self.radius
    }

    /// Parameter interval `[t0, t1]` of the line `origin + t·dir` (unit `dir`)
    /// inside the closed ball, if the line meets it.
    #[inline]
    pub fn chord(&self, origin: &Point, dir: &Point) -> Option<(f64, f64)> {
        let oc = *origin - self.center;
        let b = dir.dot(&oc);
        let disc = b * b - (oc.norm_sq() - self.radius * self.radius);
        if disc <= 0.0 {
            return None;
        }
        let s = disc.sqrt();
        Some((-b - s, -b + s))
    }

    /// Maps the ball through `x ↦ (x − x0) / scale`.
    pub fn scaled(&self, x0: &Point, scale: f64) -> Ball {
        Ball { center: (self.center - *x0) * (1.0 / scale), radius: self.radius / scale }
    }
}

/// Radius of a radial shape as a function of the unit direction.
#[derive(Clone)]
pub struct RadialProfile {
    pub label: String,
    func: Arc<dyn Fn(&Point) -> f64 + Send + Sync>,
}

impl RadialProfile {
    pub fn new(label: impl Into<String>, func: impl Fn(&Point) -> f64 + Send + Sync + 'static) -> Self {
        Self { label: label.into(), func: Arc::new(func) }
    }

    #[inline]
    pub fn radius(&self, u: &Point) -> f64 {
        (self.func)(u)
    }
}

impl fmt::Debug for RadialProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RadialProfile({})", self.label)
    }
}

/// Angles of a unit direction: `θ = atan2(u2, u1)` for n = 2,
/// `(θ, φ) = (acos u3, atan2(u2, u1))` for n = 3.
pub fn direction_angles(u: &Point) -> (f64, f64) {
    if u.dim() == 2 {
        (u[1].atan2(u[0]), 0.0)
    } else {
        (u[2].clamp(-1.0, 1.0).acos(), u[1].atan2(u[0]))
    }
}

#[derive(Clone, Debug)]
pub enum Shape {
    Ball { center: Point, radius: f64 },
    AxisBox { lo: Point, hi: Point },
    Radial { center: Point, profile: RadialProfile },
}

#[derive(Clone, Debug)]
pub struct StarDomain {
    dim: usize,
    pub center_ball: Ball,
    pub shape: Shape,
    diameter: f64,
    bounding: Ball,
}

const RADIAL_MARCH_STEPS: usize = 1024;

impl StarDomain {
    pub fn ball(center: Point, radius: f64, center_ball: Ball) -> Result<Self> {
        Ball::new(center, radius)?;
        Self::build(Shape::Ball { center, radius }, center_ball)
    }

    pub fn axis_box(lo: Point, hi: Point, center_ball: Ball) -> Result<Self> {
        hi.check_dim(lo.dim())?;
        if (0..lo.dim()).any(|k| !(hi[k] > lo[k])) {
            return Err(BgkError::InvalidGeometry("box requires lo < hi in every coordinate".into()));
        }
        Self::build(Shape::AxisBox { lo, hi }, center_ball)
    }

    pub fn radial(center: Point, profile: RadialProfile, center_ball: Ball) -> Result<Self> {
        Self::build(Shape::Radial { center, profile }, center_ball)
    }

    fn build(shape: Shape, center_ball: Ball) -> Result<Self> {
        let dim = match &shape {
            Shape::Ball { center, .. } | Shape::Radial { center, .. } => center.dim(),
            Shape::AxisBox { lo, .. } => lo.dim(),
        };
        if !(2..=3).contains(&dim) {
            return Err(BgkError::UnsupportedDimension(dim));
        }
        center_ball.center.check_dim(dim)?;
        let mut d = Self { dim, center_ball, shape, diameter: 0.0, bounding: center_ball };
        d.bounding = d.compute_bounding()?;
        d.diameter = d.compute_diameter();
        if !d.center_ball.center.is_finite() || !d.inside(&d.center_ball.center) {
            return Err(BgkError::InvalidGeometry("center ball center must lie inside the domain".into()));
        }
        Ok(d)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// A ball containing the closure of the domain.
    pub fn bounding_ball(&self) -> Ball {
        self.bounding
    }

    /// Axis-aligned box containing the domain.
    pub fn bounding_box(&self) -> (Point, Point) {
        match &self.shape {
            Shape::AxisBox { lo, hi } => (*lo, *hi),
            _ => {
                let b = self.bounding;
                let mut lo = b.center;
                let mut hi = b.center;
                for k in 0..self.dim {
                    lo[k] -= b.radius;
                    hi[k] += b.radius;
                }
                (lo, hi)
            }
        }
    }

    #[inline]
    fn radial_radius(&self, profile: &RadialProfile, u: &Point) -> f64 {
        profile.radius(u)
    }

    /// Membership without a dimension check.
    #[inline]
    pub fn inside(&self, x: &Point) -> bool {
        match &self.shape {
            Shape::Ball { center, radius } => (*x - *center).norm_sq() < radius * radius,
            Shape::AxisBox { lo, hi } => (0..self.dim).all(|k| x[k] > lo[k] && x[k] < hi[k]),
            Shape::Radial { center, profile } => {
                let v = *x - *center;
                let r = v.norm();
                if r == 0.0 {
                    return true;
                }
                r < self.radial_radius(profile, &(v * (1.0 / r)))
            }
        }
    }

    pub fn contains(&self, x: &Point) -> Result<bool> {
        x.check_dim(self.dim)?;
        Ok(self.inside(x))
    }

    fn compute_bounding(&self) -> Result<Ball> {
        match &self.shape {
            Shape::Ball { center, radius } => Ball::new(*center, *radius),
            Shape::AxisBox { lo, hi } => {
                let c = (*lo + *hi) * 0.5;
                Ball::new(c, (*hi - c).norm())
            }
            Shape::Radial { center, profile } => {
                let mut rmax: f64 = 0.0;
                for u in boundary_directions(self.dim, 4096) {
                    let r = self.radial_radius(profile, &u);
                    if !(r > 0.0 && r.is_finite()) {
                        return Err(BgkError::InvalidGeometry(format!(
                            "radial profile {} must be positive and finite, got {r}",
                            profile.label
                        )));
                    }
                    rmax = rmax.max(r);
                }
                Ball::new(*center, rmax * 1.02)
            }
        }
    }

    fn compute_diameter(&self) -> f64 {
        match &self.shape {
            Shape::Ball { radius, .. } => 2.0 * radius,
            Shape::AxisBox { lo, hi } => (*hi - *lo).norm(),
            Shape::Radial { center, profile } => {
                let pts: Vec<Point> = boundary_directions(self.dim, if self.dim == 2 { 4096 } else { 3000 })
                    .into_iter()
                    .map(|u| *center + u * self.radial_radius(profile, &u))
                    .collect();
                let mut best: f64 = 0.0;
                for i in 0..pts.len() {
                    for j in i + 1..pts.len() {
                        best = best.max((pts[i] - pts[j]).norm_sq());
                    }
                }
                best.sqrt()
            }
        }
    }

    /// Inside intervals `[ρ0, ρ1)` of the ray `origin + ρ·dir`, `ρ ∈ [0, max_len]`,
    /// in increasing order. `dir` must be a unit vector.
    pub fn ray_segments(&self, origin: &Point, dir: &Point, max_len: f64) -> Result<Vec<(f64, f64)>> {
        origin.check_dim(self.dim)?;
        dir.check_dim(self.dim)?;
        let clip = |t0: f64, t1: f64| -> Vec<(f64, f64)> {
            let a = t0.max(0.0);
            let b = t1.min(max_len);
            if b > a {
                vec![(a, b)]
            } else {
                vec![]
            }
        };
        match &self.shape {
            Shape::Ball { center, radius } => {
                let b = Ball { center: *center, radius: *radius };
                Ok(b.chord(origin, dir).map(|(t0, t1)| clip(t0, t1)).unwrap_or_default())
            }
            Shape::AxisBox { lo, hi } => {
                let mut t0 = f64::NEG_INFINITY;
                let mut t1 = f64::INFINITY;
                for k in 0..self.dim {
                    if dir[k] == 0.0 {
                        if !(origin[k] > lo[k] && origin[k] < hi[k]) {
                            return Ok(vec![]);
                        }
                    } else {
                        let ta = (lo[k] - origin[k]) / dir[k];
                        let tb = (hi[k] - origin[k]) / dir[k];
                        t0 = t0.max(ta.min(tb));
                        t1 = t1.min(ta.max(tb));
                    }
                }
                Ok(clip(t0, t1))
            }
            Shape::Radial { .. } => Ok(self.radial_segments(origin, dir, max_len)),
        }
    }

    fn radial_segments(&self, origin: &Point, dir: &Point, max_len: f64) -> Vec<(f64, f64)> {
        let Some((t0, t1)) = self.bounding.chord(origin, dir) else {
            return vec![];
        };
        let a = t0.max(0.0);
        let b = t1.min(max_len);
        if !(b > a) {
            return vec![];
        }
        let at = |t: f64| self.inside(&(*origin + *dir * t));
        let tol = 1e-13 * self.diameter.max(f64::MIN_POSITIVE);
        let refine = |mut lo: f64, mut hi: f64| -> f64 {
            // `lo` and `hi` have different membership; keep the invariant.
            let lo_in = at(lo);
            while hi - lo > tol {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if at(mid) == lo_in {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        let steps = RADIAL_MARCH_STEPS;
        let h = (b - a) / steps as f64;
        let mut out = Vec::new();
        let mut prev_t = a;
        let mut prev_in = at(a);
        let mut start = if prev_in { Some(a) } else { None };
        for k in 1..=steps {
            let t = if k == steps { b } else { a + k as f64 * h };
            let now_in = at(t);
            if now_in != prev_in {
                let edge = refine(prev_t, t);
                if now_in {
                    start = Some(edge);
                } else if let Some(s) = start.take() {
                    out.push((s, edge));
                }
            }
            prev_in = now_in;
            prev_t = t;
        }
        if let Some(s) = start {
            out.push((s, b));
        }
        out
    }

    /// Largest `ρ*` with `origin + ρ·dir` inside for all `ρ ∈ [0, ρ*)`.
    pub fn ray_exit(&self, origin: &Point, dir: &Point) -> Result<f64> {
        if !self.contains(origin)? {
            return Err(BgkError::OutsideDomain(origin.as_slice().to_vec()));
        }
        let u = dir.normalized().ok_or(BgkError::ZeroDirection)?;
        let segs = self.ray_segments(origin, &u, f64::INFINITY)?;
        Ok(segs.first().map(|s| s.1).unwrap_or(0.0))
    }

    /// Distance from an interior point to the boundary. Exact for balls and
    /// boxes; for radial shapes the minimum exit distance over 4096 directions.
    pub fn boundary_distance(&self, x: &Point) -> Result<f64> {
        if !self.contains(x)? {
            return Ok(0.0);
        }
        Ok(match &self.shape {
            Shape::Ball { center, radius } => radius - (*x - *center).norm(),
            Shape::AxisBox { lo, hi } => {
                (0..self.dim).map(|k| (x[k] - lo[k]).min(hi[k] - x[k])).fold(f64::INFINITY, f64::min)
            }
            Shape::Radial { .. } => {
                let mut best = f64::INFINITY;
                for u in boundary_directions(self.dim, 4096) {
                    best = best.min(self.ray_exit(x, &u)?);
                }
                best
            }
        })
    }

    /// The image of the domain (and its center ball) under `x ↦ (x − x0)/scale`.
    pub fn scaled(&self, x0: &Point, scale: f64) -> Result<Self> {
        if !(scale > 0.0) {
            return Err(BgkError::InvalidArgument("scale must be positive".into()));
        }
        let map = |p: &Point| (*p - *x0) * (1.0 / scale);
        let cb = self.center_ball.scaled(x0, scale);
        match &self.shape {
            Shape::Ball { center, radius } => Self::ball(map(center), radius / scale, cb),
            Shape::AxisBox { lo, hi } => Self::axis_box(map(lo), map(hi), cb),
            Shape::Radial { center, profile } => {
                let inner = profile.clone();
                let p = RadialProfile::new(format!("({})/{}", profile.label, scale), move |u| inner.radius(u) / scale);
                Self::radial(map(center), p, cb)
            }
        }
    }

    /// Volume of the domain. Exact for balls and boxes.
    pub fn measure(&self) -> Option<f64> {
        match &self.shape {
            Shape::Ball { radius, .. } => Some(match self.dim {
                2 => PI * radius * radius,
                _ => 4.0 / 3.0 * PI * radius.powi(3),
            }),
            Shape::AxisBox { lo, hi } => Some((0..self.dim).map(|k| hi[k] - lo[k]).product()),
            Shape::Radial { .. } => None,
        }
    }
}

/// Quasi-uniform unit directions: equispaced angles for n = 2, a Fibonacci
/// lattice for n = 3.
pub fn boundary_directions(dim: usize, count: usize) -> Vec<Point> {
    if dim == 2 {
        (0..count)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / count as f64;
                Point::from_slice(&[t.cos(), t.sin()])
            })
            .collect()
    } else {
        let golden = PI * (3.0 - 5.0_f64.sqrt());
        (0..count)
            .map(|k| {
                let z = 1.0 - 2.0 * (k as f64 + 0.5) / count as f64;
                let s = (1.0 - z * z).sqrt();
                let p = golden * k as f64;
                Point::from_slice(&[s * p.cos(), s * p.sin(), z])
            })
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct StarShapeReport {
    pub ok: bool,
    /// First violating `(y, z)` pair, if any.
    pub worst_pair: Option<(Point, Point)>,
    pub samples: usize,
}

/// Sampled check that `d` is star-shaped with respect to every point of the
/// closure of `b`, and that the closure of `b` lies in `d`.
///
/// Draws `n_samples` quasi-random pairs `y ∈ d`, `z ∈ b̄` (half of the `z` on
/// the sphere `∂b`) and tests 32 points of each segment `[y, z]`. Passing is
/// evidence, not proof.
pub fn verify_star_shaped(d: &StarDomain, b: &Ball, n_samples: usize) -> Result<StarShapeReport> {
    b.center.check_dim(d.dim())?;
    let dim = d.dim();
    let (lo, hi) = d.bounding_box();
    let mut ys = Halton::new(dim, 0);
    let mut zs = Halton::new(dim, dim);
    let cube_lo = Point::from_slice(&vec![-1.0; dim]);
    let cube_hi = Point::from_slice(&vec![1.0; dim]);

    let mut next_y = || loop {
        let y = ys.next_in_box(&lo, &hi);
        if d.inside(&y) {
            return y;
        }
    };
    let mut next_z = |on_sphere: bool| loop {
        let v = zs.next_in_box(&cube_lo, &cube_hi);
        let r = v.norm();
        if r < 1.0 && r > 1e-9 {
            let v = if on_sphere { v * (1.0 / r) } else { v };
            return b.center + v * b.radius;
        }
    };

    for k in 0..n_samples.max(1) {
        let y = next_y();
        let z = next_z(k % 2 == 0);
        for s in 0..32 {
            let t = s as f64 / 31.0;
            let p = y + (z - y) * t;
            if !d.inside(&p) {
                return Ok(StarShapeReport { ok: false, worst_pair: Some((y, z)), samples: k + 1 });
            }
        }
    }
    Ok(StarShapeReport { ok: true, worst_pair: None, samples: n_samples.max(1) })
}

#[derive(Clone, Copy, Debug)]
pub struct Overlap {
    /// Pieces `i` and `i + 1` overlap.
    pub i: usize,
    pub ball: Ball,
}

/// Ordered union of star-shaped pieces; consecutive pieces overlap.
#[derive(Clone, Debug)]
pub struct UnionDomain {
    pub pieces: Vec<StarDomain>,
    pub overlaps: Vec<Overlap>,
}

impl UnionDomain {
    /// Validates the witness balls: one per consecutive pair, each inside both
    /// pieces (checked on 256 boundary points and the center).
    pub fn new(pieces: Vec<StarDomain>, mut overlaps: Vec<Overlap>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(BgkError::InvalidGeometry("union needs at least one piece".into()));
        }
        let dim = pieces[0].dim();
        for p in &pieces {
            if p.dim() != dim {
                return Err(BgkError::DimensionMismatch { expected: dim, found: p.dim() });
            }
        }
        overlaps.sort_by_key(|o| o.i);
        if overlaps.len() != pieces.len() - 1 || overlaps.iter().enumerate().any(|(k, o)| o.i != k) {
            return Err(BgkError::InvalidGeometry(
                "need exactly one overlap witness for each consecutive pair (i, i+1)".into(),
            ));
        }
        for o in &overlaps {
            o.ball.center.check_dim(dim)?;
            let probes = std::iter::once(o.ball.center).chain(
                boundary_directions(dim, 256).into_iter().map(|u| o.ball.center + u * (o.ball.radius * (1.0 - 1e-9))),
            );
            for q in probes {
                if !pieces[o.i].inside(&q) || !pieces[o.i + 1].inside(&q) {
                    return Err(BgkError::InvalidGeometry(format!(
                        "overlap witness {} is not contained in pieces {} and {}",
                        o.i,
                        o.i,
                        o.i + 1
                    )));
                }
            }
        }
        Ok(Self { pieces, overlaps })
    }

    pub fn dim(&self) -> usize {
        self.pieces[0].dim()
    }

    pub fn inside(&self, x: &Point) -> bool {
        self.pieces.iter().any(|p| p.inside(x))
    }

    pub fn contains(&self, x: &Point) -> Result<bool> {
        x.check_dim(self.dim())?;
        Ok(self.inside(x))
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        let (mut lo, mut hi) = self.pieces[0].bounding_box();
        for p in &self.pieces[1..] {
            let (l, h) = p.bounding_box();
            for k in 0..self.dim() {
                lo[k] = lo[k].min(l[k]);
                hi[k] = hi[k].max(h[k]);
            }
        }
        (lo, hi)
    }
}
