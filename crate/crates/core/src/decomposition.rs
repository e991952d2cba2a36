//! Partition of unity over a chain of overlapping star-shaped pieces,
//! zero-mean localization of `F`, and the summed solution.

use std::sync::Arc;

use crate::bump::{psi_eval, Mollifier};
use crate::error::{BgkError, Result};
use crate::geometry::{StarDomain, UnionDomain};
use crate::point::{Mat, Point};
use crate::potential::{scaled_solve, ScalarField, ScaledPotential, VectorPotential};
use crate::quadrature::{integrate_polar, QuadConfig};

/// Plateau parameter: `θᵢ = 1` where `|x − cᵢ| ≤ core·ρᵢ(u)`.
pub const DEFAULT_CORE: f64 = 0.5;

/// `1 − (10τ³ − 15τ⁴ + 6τ⁵)` on `[0, 1]`, a C² step from 1 to 0.
#[inline]
fn step_down(tau: f64) -> f64 {
    if tau <= 0.0 {
        1.0
    } else if tau >= 1.0 {
        0.0
    } else {
        let s = 1.0 - tau;
        s * s * s * (1.0 + 3.0 * tau + 6.0 * tau * tau)
    }
}

#[derive(Clone, Debug)]
pub struct Partition {
    pub pieces: Vec<StarDomain>,
    /// `φᵢ`, a normalized bump on the witness ball of pieces `i` and `i + 1`.
    pub transfer_bumps: Vec<Mollifier>,
    pub core: f64,
}

pub fn build_partition(u: &UnionDomain) -> Result<Partition> {
    build_partition_with(u, DEFAULT_CORE)
}

pub fn build_partition_with(u: &UnionDomain, core: f64) -> Result<Partition> {
    if !(core > 0.0 && core < 1.0) {
        return Err(BgkError::InvalidArgument(format!("plateau core must lie in (0, 1), got {core}")));
    }
    let transfer_bumps = u
        .overlaps
        .iter()
        .map(|o| {
            if !(o.ball.radius > 0.0) {
                return Err(BgkError::InvalidGeometry(format!("overlap witness {} is empty", o.i)));
            }
            Mollifier::new(o.ball)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Partition { pieces: u.pieces.clone(), transfer_bumps, core })
}

impl Partition {
    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    /// Plateau of piece `i`: radial in the star coordinates of its center ball.
    pub fn theta(&self, i: usize, x: &Point) -> f64 {
        let p = &self.pieces[i];
        if !p.inside(x) {
            return 0.0;
        }
        let c = p.center_ball.center;
        let r = x.dist(&c);
        if r == 0.0 {
            return 1.0;
        }
        let exit = match p.ray_exit(&c, &(*x - c)) {
            Ok(e) if e > 0.0 => e,
            _ => return 0.0,
        };
        step_down((r / exit - self.core) / (1.0 - self.core))
    }

    /// `(χ₁(x), …, χ_N(x))`; all zero outside the union.
    pub fn chis(&self, x: &Point) -> Vec<f64> {
        let mut t: Vec<f64> = (0..self.len()).map(|i| self.theta(i, x)).collect();
        let s: f64 = t.iter().sum();
        if s > 0.0 {
            for v in &mut t {
                *v /= s;
            }
        }
        t
    }

    pub fn chi(&self, i: usize, x: &Point) -> f64 {
        let ti = self.theta(i, x);
        if ti == 0.0 {
            return 0.0;
        }
        let s: f64 = (0..self.len()).map(|k| if k == i { ti } else { self.theta(k, x) }).sum();
        ti / s
    }

    pub fn transfer_bump(&self, i: usize, x: &Point) -> f64 {
        psi_eval(&self.transfer_bumps[i], x)
    }
}

#[derive(Clone, Debug)]
pub struct Localized {
    pub fields: Vec<ScalarField>,
    /// `∫ χᵢ F` over piece `i`.
    pub piece_integrals: Vec<f64>,
    /// Cumulative sums `mᵢ` of `piece_integrals`; the last is `∫ F`.
    pub cumulative: Vec<f64>,
}

/// Splits a zero-mean `F` into `Fᵢ` supported in piece `i` with `∫ Fᵢ = 0`
/// and `Σ Fᵢ = F`.
pub fn localize(f: &ScalarField, u: &UnionDomain, p: &Partition, quad: &QuadConfig) -> Result<Localized> {
    let n = p.len();
    let shared = Arc::new(p.clone());
    let mut piece_integrals = Vec::with_capacity(n);
    let mut scale = 0.0;
    for (i, piece) in u.pieces.iter().enumerate() {
        let c = piece.center_ball.center;
        let g = integrate_polar(|y| p.chi(i, y) * f.eval(y), &c, piece, quad)?;
        let a = integrate_polar(|y| (p.chi(i, y) * f.eval(y)).abs(), &c, piece, quad)?;
        if !g.value.is_finite() {
            return Err(BgkError::NonFiniteField { value: g.value, point: c.as_slice().to_vec() });
        }
        piece_integrals.push(g.value);
        scale += a.value;
    }
    let cumulative: Vec<f64> = piece_integrals
        .iter()
        .scan(0.0, |s, v| {
            *s += v;
            Some(*s)
        })
        .collect();
    let total = cumulative[n - 1];
    if total.abs() > 1e-6 * scale.max(1.0) {
        return Err(BgkError::CompatibilityViolated(total));
    }
    let fields = (0..n)
        .map(|i| {
            let part = shared.clone();
            let f = f.clone();
            let prev = if i > 0 { cumulative[i - 1] } else { 0.0 };
            let own = if i + 1 < n { cumulative[i] } else { 0.0 };
            ScalarField::new(format!("F_{}", i + 1), move |x: &Point| {
                let chi = part.chi(i, x);
                let mut v = if chi > 0.0 { chi * f.eval(x) } else { 0.0 };
                if i > 0 {
                    v += prev * part.transfer_bump(i - 1, x);
                }
                if i + 1 < part.len() {
                    v -= own * part.transfer_bump(i, x);
                }
                v
            })
            .with_zero_mean(true)
        })
        .collect();
    Ok(Localized { fields, piece_integrals, cumulative })
}

/// `v = Σ v_k`, each `v_k` solving `div v_k = F_k` on piece `k` and vanishing
/// outside it.
#[derive(Clone, Debug)]
pub struct CompositePotential {
    pub parts: Vec<ScaledPotential>,
    pub localized: Localized,
}

pub fn solve_union(f: &ScalarField, u: &UnionDomain, quad: &QuadConfig) -> Result<CompositePotential> {
    let p = build_partition(u)?;
    let localized = localize(f, u, &p, quad)?;
    let parts = u
        .pieces
        .iter()
        .zip(&localized.fields)
        .map(|(piece, fk)| scaled_solve(fk, piece, &piece.center_ball, quad.clone()))
        .collect::<Result<Vec<_>>>()?;
    Ok(CompositePotential { parts, localized })
}

impl CompositePotential {
    fn containing<'a>(&'a self, x: &'a Point) -> impl Iterator<Item = &'a ScaledPotential> + 'a {
        self.parts.iter().filter(move |p| p.inside(x))
    }
}

impl VectorPotential for CompositePotential {
    fn dim(&self) -> usize {
        self.parts[0].dim()
    }

    fn v(&self, x: &Point) -> Result<Point> {
        x.check_dim(self.dim())?;
        let mut acc = Point::zeros(self.dim());
        for p in self.containing(x) {
            acc += p.v(x)?;
        }
        Ok(acc)
    }

    fn v_eps(&self, x: &Point, eps: f64) -> Result<Point> {
        x.check_dim(self.dim())?;
        let mut acc = Point::zeros(self.dim());
        for p in self.containing(x) {
            acc += p.v_eps(x, eps)?;
        }
        Ok(acc)
    }

    fn div_v_eps(&self, x: &Point, eps: f64) -> Result<f64> {
        if !self.inside(x) {
            return Err(BgkError::OutsideDomain(x.as_slice().to_vec()));
        }
        let mut acc = 0.0;
        for p in self.containing(x) {
            acc += p.div_v_eps(x, eps)?;
        }
        Ok(acc)
    }

    fn grad(&self, x: &Point) -> Result<Mat> {
        if !self.inside(x) {
            return Err(BgkError::OutsideDomain(x.as_slice().to_vec()));
        }
        let mut acc = Mat::zeros(self.dim());
        for p in self.containing(x) {
            let g = p.grad(x)?;
            for i in 0..self.dim() {
                for j in 0..self.dim() {
                    acc.set(i, j, acc.get(i, j) + g.get(i, j));
                }
            }
        }
        Ok(acc)
    }

    fn inside(&self, x: &Point) -> bool {
        self.parts.iter().any(|p| p.inside(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_is_c2() {
        assert_eq!(step_down(0.0), 1.0);
        assert_eq!(step_down(1.0), 0.0);
        assert!((step_down(0.5) - 0.5).abs() < 1e-15);
        let h = 1e-4;
        for t in [0.0, 1.0] {
            let d1 = (step_down(t + h) - step_down(t - h)) / (2.0 * h);
            let d2 = (step_down(t + h) - 2.0 * step_down(t) + step_down(t - h)) / (h * h);
            assert!(d1.abs() < 1e-6 && d2.abs() < 1e-3, "{t}: {d1} {d2}");
        }
    }
}
