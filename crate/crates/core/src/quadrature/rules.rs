//! One-dimensional Gauss–Legendre rules and angular rules on `S^{d−1}`.

use crate::error::{CoreError, Result};
use crate::jet::Vector;
use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)] // inherent methods shadow it whenever std is linked
use num_traits::Float;

/// Gauss–Legendre nodes and weights on `[-1, 1]`, by Newton iteration on
/// `P_n` from the Chebyshev initial guesses.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = -(PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        nodes.push(x);
        weights.push(2.0 / ((1.0 - x * x) * dp * dp));
    }
    (nodes, weights)
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Gauss–Legendre rule mapped to `[a, b]`, appended to `nodes`/`weights`.
pub fn gauss_panel(
    rule: &(Vec<f64>, Vec<f64>),
    a: f64,
    b: f64,
    nodes: &mut Vec<f64>,
    weights: &mut Vec<f64>,
) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    for (x, w) in rule.0.iter().zip(&rule.1) {
        nodes.push(c + h * x);
        weights.push(h * w);
    }
}

/// Directions and weights integrating functions on the unit sphere
/// (the surface measure, total `|S^{d−1}|`).
#[derive(Debug, Clone, PartialEq)]
pub struct AngularRule<const D: usize> {
    pub directions: Vec<Vector<D>>,
    pub weights: Vec<f64>,
}

impl<const D: usize> AngularRule<D> {
    /// `d = 1`: the two points `±1`. `d = 2`: `order` equispaced angles.
    /// `d = 3`: `order` azimuths times `order/2` Gauss–Legendre polar nodes
    /// in `cos θ`.
    pub fn new(order: usize) -> Result<Self> {
        let mut directions = Vec::new();
        let mut weights = Vec::new();
        match D {
            1 => {
                directions.push(Vector::<D>::from_element(1.0));
                directions.push(Vector::<D>::from_element(-1.0));
                weights.extend([1.0, 1.0]);
            }
            2 => {
                let n = order.max(4);
                for j in 0..n {
                    let t = 2.0 * PI * j as f64 / n as f64;
                    directions.push(Vector::<D>::from_fn(
                        |i, _| if i == 0 { t.cos() } else { t.sin() },
                    ));
                    weights.push(2.0 * PI / n as f64);
                }
            }
            3 => {
                let n_az = order.max(4);
                let polar = gauss_legendre((order / 2).max(2));
                for (z, wz) in polar.0.iter().zip(&polar.1) {
                    let rho = (1.0 - z * z).sqrt();
                    for j in 0..n_az {
                        let t = 2.0 * PI * (j as f64 + 0.5) / n_az as f64;
                        let v = [rho * t.cos(), rho * t.sin(), *z];
                        directions.push(Vector::<D>::from_fn(|i, _| v[i]));
                        weights.push(wz * 2.0 * PI / n_az as f64);
                    }
                }
            }
            d => return Err(CoreError::UnsupportedDimension(d)),
        }
        Ok(AngularRule {
            directions,
            weights,
        })
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }
}
