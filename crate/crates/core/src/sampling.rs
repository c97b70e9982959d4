//! Reproducible point sampling.
//!
//! A ChaCha8 generator is selected by `(seed, stream)`; each check uses its own
//! stream so that adding or removing a check never shifts another check's
//! points.

use crate::jet::Vector;
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent methods shadow it whenever std is linked
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Stream identifiers for the checks that draw random points.
pub mod streams {
    pub const ASSUMPTION: u64 = 1;
    pub const SANDWICH: u64 = 2;
    pub const WEIGHT_IDENTITIES: u64 = 3;
    pub const POINTWISE: u64 = 4;
    pub const CONJUGATION: u64 = 5;
    pub const CERTIFY: u64 = 6;
}

pub struct PointSampler {
    rng: ChaCha8Rng,
}

impl PointSampler {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        PointSampler { rng }
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.rng.random::<f64>()
    }

    /// Uniform point of the unit ball (rejection from the cube).
    pub fn unit_ball<const D: usize>(&mut self) -> Vector<D> {
        loop {
            let x = Vector::<D>::from_fn(|_, _| self.uniform(-1.0, 1.0));
            if x.norm_squared() <= 1.0 {
                return x;
            }
        }
    }

    /// Uniform direction on the unit sphere.
    pub fn direction<const D: usize>(&mut self) -> Vector<D> {
        loop {
            let x = self.unit_ball::<D>();
            let n = x.norm();
            if n > 1e-3 {
                return x / n;
            }
        }
    }

    pub fn ball<const D: usize>(&mut self, radius: f64) -> Vector<D> {
        self.unit_ball::<D>() * radius
    }

    /// Uniform (by volume) point with `r_in ≤ |x| ≤ r_out`.
    pub fn annulus<const D: usize>(&mut self, r_in: f64, r_out: f64) -> Vector<D> {
        let d = D as i32;
        let t = self.uniform(0.0, 1.0);
        let r = (r_in.powi(d) + t * (r_out.powi(d) - r_in.powi(d))).powf(1.0 / D as f64);
        self.direction::<D>() * r
    }

    pub fn annulus_points<const D: usize>(
        &mut self,
        n: usize,
        r_in: f64,
        r_out: f64,
    ) -> Vec<Vector<D>> {
        (0..n).map(|_| self.annulus::<D>(r_in, r_out)).collect()
    }

    pub fn directions<const D: usize>(&mut self, n: usize) -> Vec<Vector<D>> {
        (0..n).map(|_| self.direction::<D>()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_points() {
        let a: Vec<Vector<3>> = PointSampler::new(7, 1).annulus_points(50, 0.1, 0.9);
        let b: Vec<Vector<3>> = PointSampler::new(7, 1).annulus_points(50, 0.1, 0.9);
        assert_eq!(a, b);
        let c: Vec<Vector<3>> = PointSampler::new(7, 2).annulus_points(50, 0.1, 0.9);
        assert_ne!(a, c);
    }

    #[test]
    fn annulus_points_respect_radii() {
        let mut s = PointSampler::new(1, 0);
        for _ in 0..1000 {
            let x = s.annulus::<2>(0.2, 0.5);
            let r = x.norm();
            assert!((0.2 - 1e-12..=0.5 + 1e-12).contains(&r));
        }
    }
}
