//! Deterministic quasi-random and pseudo-random point sources.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::point::Point;

const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

/// Radical inverse of `index` in `base`.
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while index > 0 {
        r += f * (index % base) as f64;
        index /= base;
        f *= inv;
    }
    r
}

/// Halton sequence in `[0, 1)^dim`, starting from `offset` into the prime list.
#[derive(Clone, Debug)]
pub struct Halton {
    dim: usize,
    base_offset: usize,
    index: u64,
}

impl Halton {
    pub fn new(dim: usize, base_offset: usize) -> Self {
        assert!(dim + base_offset <= PRIMES.len());
        // Skip the leading zero point.
        Self { dim, base_offset, index: 1 }
    }

    pub fn next_unit(&mut self) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (k, o) in out.iter_mut().enumerate().take(self.dim) {
            *o = radical_inverse(self.index, PRIMES[self.base_offset + k]);
        }
        self.index += 1;
        out
    }

    /// Next point of the sequence inside the axis box `[lo, hi]`.
    pub fn next_in_box(&mut self, lo: &Point, hi: &Point) -> Point {
        let u = self.next_unit();
        let mut p = *lo;
        for k in 0..self.dim {
            p[k] = lo[k] + u[k] * (hi[k] - lo[k]);
        }
        p
    }
}

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniformly distributed unit vector.
pub fn random_direction<R: Rng>(rng: &mut R, dim: usize) -> Point {
    loop {
        let mut p = Point::zeros(dim);
        for k in 0..dim {
            p[k] = rng.gen_range(-1.0..1.0);
        }
        let r = p.norm();
        if r > 1e-3 && r <= 1.0 {
            return p * (1.0 / r);
        }
    }
}

/// Uniform point in the ball `B(center, radius)`.
pub fn random_in_ball<R: Rng>(rng: &mut R, center: &Point, radius: f64) -> Point {
    let dim = center.dim();
    loop {
        let mut p = Point::zeros(dim);
        for k in 0..dim {
            p[k] = rng.gen_range(-1.0..1.0);
        }
        if p.norm_sq() < 1.0 {
            return *center + p * radius;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radical_inverse_base_two() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(2, 2), 0.25);
        assert_eq!(radical_inverse(3, 2), 0.75);
    }

    #[test]
    fn halton_points_stay_in_box() {
        let mut h = Halton::new(2, 0);
        let lo = Point::from_slice(&[-1.0, 2.0]);
        let hi = Point::from_slice(&[1.0, 3.0]);
        for _ in 0..100 {
            let p = h.next_in_box(&lo, &hi);
            assert!(p[0] >= -1.0 && p[0] < 1.0 && p[1] >= 2.0 && p[1] < 3.0);
        }
    }
}
