//! Small fixed-capacity vectors and matrices for `n ∈ {2, 3}`.
//!
//! Every object in a problem shares one runtime dimension. Storage is a
//! `[f64; 3]` so points are `Copy` and never allocate inside quadrature loops;
//! unused trailing slots are kept at zero.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};

use crate::error::{BgkError, Result};

pub const MAX_DIM: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    dim: usize,
    c: [f64; MAX_DIM],
}

impl Point {
    pub fn new(coords: &[f64]) -> Result<Self> {
        let dim = coords.len();
        if !(2..=MAX_DIM).contains(&dim) {
            return Err(BgkError::UnsupportedDimension(dim));
        }
        let mut c = [0.0; MAX_DIM];
        c[..dim].copy_from_slice(coords);
        Ok(Self { dim, c })
    }

    /// Panics on an unsupported dimension; for literals in tests and examples.
    pub fn from_slice(coords: &[f64]) -> Self {
        Self::new(coords).expect("point dimension must be 2 or 3")
    }

    pub fn zeros(dim: usize) -> Self {
        debug_assert!((2..=MAX_DIM).contains(&dim));
        Self { dim, c: [0.0; MAX_DIM] }
    }

    /// Unit vector along axis `axis`.
    pub fn axis(dim: usize, axis: usize) -> Self {
        let mut p = Self::zeros(dim);
        p.c[axis] = 1.0;
        p
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.c[..self.dim]
    }

    #[inline]
    pub fn dot(&self, other: &Self) -> f64 {
        self.c[0] * other.c[0] + self.c[1] * other.c[1] + self.c[2] * other.c[2]
    }

    #[inline]
    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    #[inline]
    pub fn dist(&self, other: &Self) -> f64 {
        (*self - *other).norm()
    }

    pub fn max_abs(&self) -> f64 {
        self.as_slice().iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Returns `self / |self|`, or `None` for the zero vector.
    pub fn normalized(&self) -> Option<Self> {
        let r = self.norm();
        (r > 0.0).then(|| *self * (1.0 / r))
    }

    pub fn check_dim(&self, dim: usize) -> Result<()> {
        if self.dim == dim {
            Ok(())
        } else {
            Err(BgkError::DimensionMismatch { expected: dim, found: self.dim })
        }
    }

    pub fn is_finite(&self) -> bool {
        self.as_slice().iter().all(|v| v.is_finite())
    }
}

impl Index<usize> for Point {
    type Output = f64;
    #[inline]
    fn index(&self, i: usize) -> &f64 {
        &self.c[i]
    }
}

impl IndexMut<usize> for Point {
    #[inline]
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.c[i]
    }
}

impl Add for Point {
    type Output = Point;
    #[inline]
    fn add(self, o: Point) -> Point {
        Point { dim: self.dim, c: [self.c[0] + o.c[0], self.c[1] + o.c[1], self.c[2] + o.c[2]] }
    }
}

impl AddAssign for Point {
    #[inline]
    fn add_assign(&mut self, o: Point) {
        *self = *self + o;
    }
}

impl Sub for Point {
    type Output = Point;
    #[inline]
    fn sub(self, o: Point) -> Point {
        Point { dim: self.dim, c: [self.c[0] - o.c[0], self.c[1] - o.c[1], self.c[2] - o.c[2]] }
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    #[inline]
    fn mul(self, s: f64) -> Point {
        Point { dim: self.dim, c: [self.c[0] * s, self.c[1] * s, self.c[2] * s] }
    }
}

impl Neg for Point {
    type Output = Point;
    #[inline]
    fn neg(self) -> Point {
        self * -1.0
    }
}

/// Square matrix of the problem dimension, row-major: `m[i][j]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat {
    dim: usize,
    m: [[f64; MAX_DIM]; MAX_DIM],
}

impl Mat {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, m: [[0.0; MAX_DIM]; MAX_DIM] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut a = Self::zeros(dim);
        for i in 0..dim {
            a.m[i][i] = 1.0;
        }
        a
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[i][j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.m[i][j] = v;
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.m[i][i]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        let mut out = 0.0_f64;
        for i in 0..self.dim {
            for j in 0..self.dim {
                out = out.max(self.m[i][j].abs());
            }
        }
        out
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                s += self.m[i][j] * self.m[i][j];
            }
        }
        s.sqrt()
    }

    pub fn is_finite(&self) -> bool {
        (0..self.dim).all(|i| (0..self.dim).all(|j| self.m[i][j].is_finite()))
    }
}

impl Add for Mat {
    type Output = Mat;
    fn add(self, o: Mat) -> Mat {
        let mut r = self;
        for i in 0..MAX_DIM {
            for j in 0..MAX_DIM {
                r.m[i][j] += o.m[i][j];
            }
        }
        r
    }
}

impl Sub for Mat {
    type Output = Mat;
    fn sub(self, o: Mat) -> Mat {
        self + o * -1.0
    }
}

impl Mul<f64> for Mat {
    type Output = Mat;
    fn mul(self, s: f64) -> Mat {
        let mut r = self;
        for row in r.m.iter_mut() {
            for v in row.iter_mut() {
                *v *= s;
            }
        }
        r
    }
}

/// Values that quadrature rules can accumulate.
pub trait QuadValue: Copy {
    fn zero_like(&self) -> Self;
    fn add(self, other: Self) -> Self;
    fn scale(self, s: f64) -> Self;
    /// Max-abs norm used by error control.
    fn norm_inf(&self) -> f64;
    fn all_finite(&self) -> bool;
}

impl QuadValue for f64 {
    fn zero_like(&self) -> Self {
        0.0
    }
    fn add(self, other: Self) -> Self {
        self + other
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn norm_inf(&self) -> f64 {
        self.abs()
    }
    fn all_finite(&self) -> bool {
        self.is_finite()
    }
}

impl<const M: usize> QuadValue for [f64; M] {
    fn zero_like(&self) -> Self {
        [0.0; M]
    }
    fn add(mut self, other: Self) -> Self {
        for (a, b) in self.iter_mut().zip(other) {
            *a += b;
        }
        self
    }
    fn scale(mut self, s: f64) -> Self {
        for a in self.iter_mut() {
            *a *= s;
        }
        self
    }
    fn norm_inf(&self) -> f64 {
        self.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
    fn all_finite(&self) -> bool {
        self.iter().all(|v| v.is_finite())
    }
}

impl QuadValue for Point {
    fn zero_like(&self) -> Self {
        Point::zeros(self.dim)
    }
    fn add(self, other: Self) -> Self {
        self + other
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn norm_inf(&self) -> f64 {
        self.max_abs()
    }
    fn all_finite(&self) -> bool {
        self.is_finite()
    }
}

impl QuadValue for Mat {
    fn zero_like(&self) -> Self {
        Mat::zeros(self.dim)
    }
    fn add(self, other: Self) -> Self {
        self + other
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn norm_inf(&self) -> f64 {
        self.max_abs()
    }
    fn all_finite(&self) -> bool {
        self.is_finite()
    }
}

/// Pairwise summation; the order of `items` fixes the result bit-for-bit.
pub fn pairwise_sum<T: QuadValue>(items: &[T]) -> Option<T> {
    match items.len() {
        0 => None,
        1 => Some(items[0]),
        len => {
            let (lo, hi) = items.split_at(len / 2);
            Some(pairwise_sum(lo)?.add(pairwise_sum(hi)?))
        }
    }
}

impl serde::Serialize for Point {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.as_slice())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_dimensions() {
        assert!(Point::new(&[1.0]).is_err());
        assert!(Point::new(&[1.0, 2.0, 3.0, 4.0]).is_err());
        assert_eq!(Point::new(&[3.0, 4.0]).unwrap().norm(), 5.0);
    }

    #[test]
    fn pairwise_sum_matches_naive_on_integers() {
        let xs: Vec<f64> = (1..=100).map(|k| k as f64).collect();
        assert_eq!(pairwise_sum(&xs), Some(5050.0));
        assert_eq!(pairwise_sum::<f64>(&[]), None);
    }

    #[test]
    fn matrix_trace_and_identity() {
        let a = Mat::identity(3) * 2.0;
        assert_eq!(a.trace(), 6.0);
        assert_eq!((a - Mat::identity(3)).trace(), 3.0);
    }
}
