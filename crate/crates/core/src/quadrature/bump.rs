//! Smooth test functions supported on annuli `r0 < |x| < r1`.
//!
//! The radial profile is `β(r) = exp(−1/(1 − s²))` with
//! `s = (2r − r0 − r1)/(r1 − r0)`. Near the support edges `β` underflows
//! long before the integrands it enters become negligible once multiplied by
//! `w^{−2α}`, so jets are returned as a log scale `λ = −1/(1 − s²)` together
//! with the jet of `u e^{−λ}`.

use crate::error::{CoreError, Result};
use crate::jet::{ComplexJet, Jet, Matrix, Vector};
use num_complex::Complex64;
#[allow(unused_imports)] // inherent methods shadow it whenever std is linked
use num_traits::Float;

#[derive(Debug, Clone, PartialEq)]
pub enum Modulation<const D: usize> {
    None,
    /// `offset + slopeᵀx`.
    Linear {
        offset: f64,
        slope: [f64; D],
    },
    /// `e^{ikᵀx}`; makes the test function complex valued.
    PlaneWave {
        wavevector: [f64; D],
    },
    /// `cos(kᵀx)`, the real part of the plane wave.
    Cosine {
        wavevector: [f64; D],
    },
    /// `sin(kᵀx)`, the imaginary part of the plane wave.
    Sine {
        wavevector: [f64; D],
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction<const D: usize> {
    r0: f64,
    r1: f64,
    modulation: Modulation<D>,
}

/// Radial bump on `r0 < |x| < r1` times an optional modulation.
pub fn make_bump<const D: usize>(
    r0: f64,
    r1: f64,
    modulation: Modulation<D>,
) -> Result<TestFunction<D>> {
    if !(r0 > 0.0 && r0 < r1 && r1.is_finite()) {
        return Err(CoreError::InvalidRadii { r0, r1 });
    }
    Ok(TestFunction { r0, r1, modulation })
}

impl<const D: usize> TestFunction<D> {
    pub fn support(&self) -> (f64, f64) {
        (self.r0, self.r1)
    }

    pub fn modulation(&self) -> &Modulation<D> {
        &self.modulation
    }

    pub fn is_real(&self) -> bool {
        !matches!(self.modulation, Modulation::PlaneWave { .. })
    }

    /// Real and imaginary parts as separate real test functions.
    pub fn parts(&self) -> (TestFunction<D>, Option<TestFunction<D>>) {
        match &self.modulation {
            Modulation::PlaneWave { wavevector } => (
                TestFunction {
                    modulation: Modulation::Cosine {
                        wavevector: *wavevector,
                    },
                    ..self.clone()
                },
                Some(TestFunction {
                    modulation: Modulation::Sine {
                        wavevector: *wavevector,
                    },
                    ..self.clone()
                }),
            ),
            _ => (self.clone(), None),
        }
    }

    /// Identically zero (a linear modulation with zero coefficients).
    pub fn is_zero(&self) -> bool {
        matches!(&self.modulation, Modulation::Linear { offset, slope } if *offset == 0.0 && slope.iter().all(|v| *v == 0.0))
    }

    /// `s(r)` and `ds/dr`.
    fn coordinate(&self, r: f64) -> (f64, f64) {
        let c = 2.0 / (self.r1 - self.r0);
        ((2.0 * r - self.r0 - self.r1) / (self.r1 - self.r0), c)
    }

    /// `ln β(r)`; `-∞` outside the open support.
    pub fn ln_profile(&self, r: f64) -> f64 {
        if r <= self.r0 || r >= self.r1 {
            return f64::NEG_INFINITY;
        }
        let (s, _) = self.coordinate(r);
        -1.0 / ((1.0 - s) * (1.0 + s))
    }

    /// `ln β(r + δ)` with `r − r0` and `r1 − r` formed before adding `δ`, so
    /// the result keeps relative accuracy near the support edges.
    pub fn ln_profile_offset(&self, r: f64, delta: f64) -> f64 {
        let inner = (r - self.r0) + delta;
        let outer = (self.r1 - r) - delta;
        if inner <= 0.0 || outer <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let width = self.r1 - self.r0;
        -width * width / (4.0 * inner * outer)
    }

    /// `(λ, jet of u e^{−λ})`, or `None` outside the open support.
    pub fn scaled_jet(&self, x: &Vector<D>) -> Option<(f64, ComplexJet<D>)> {
        let r = x.norm();
        if r <= self.r0 || r >= self.r1 {
            return None;
        }
        let (s, c) = self.coordinate(r);
        let one_minus = (1.0 - s) * (1.0 + s);
        let lambda = -1.0 / one_minus;
        let q1 = -2.0 * s / (one_minus * one_minus);
        let q2 = -(2.0 + 6.0 * s * s) / (one_minus * one_minus * one_minus);
        let xhat = x / r;
        let radial = xhat * xhat.transpose();
        let profile = Jet {
            value: 1.0,
            grad: xhat * (q1 * c),
            hess: radial * ((q1 * q1 + q2) * c * c)
                + (Matrix::<D>::identity() - radial) * (q1 * c / r),
        };
        let jet = match &self.modulation {
            Modulation::None => ComplexJet::real(profile),
            Modulation::Linear { offset, slope } => {
                let g = Vector::<D>::from_fn(|i, _| slope[i]);
                let m = Jet {
                    value: offset + g.dot(x),
                    grad: g,
                    hess: Matrix::zeros(),
                };
                ComplexJet::real(profile.mul(&m))
            }
            Modulation::PlaneWave { wavevector } => plane_wave(wavevector, x).mul_real(&profile),
            Modulation::Cosine { wavevector } => {
                ComplexJet::real(plane_wave(wavevector, x).re.mul(&profile))
            }
            Modulation::Sine { wavevector } => {
                ComplexJet::real(plane_wave(wavevector, x).im.mul(&profile))
            }
        };
        Some((lambda, jet))
    }

    /// Unscaled jet; underflows to zero near the support edges.
    pub fn jet(&self, x: &Vector<D>) -> ComplexJet<D> {
        match self.scaled_jet(x) {
            Some((lambda, j)) => j.scale(lambda.exp()),
            None => ComplexJet::zero(),
        }
    }

    pub fn value(&self, x: &Vector<D>) -> Complex64 {
        self.jet(x).value()
    }
}

fn plane_wave<const D: usize>(wavevector: &[f64; D], x: &Vector<D>) -> ComplexJet<D> {
    let k = Vector::<D>::from_fn(|i, _| wavevector[i]);
    let phase = k.dot(x);
    let (sn, cs) = (phase.sin(), phase.cos());
    let kk = k * k.transpose();
    ComplexJet {
        re: Jet {
            value: cs,
            grad: k * -sn,
            hess: kk * -cs,
        },
        im: Jet {
            value: sn,
            grad: k * cs,
            hess: kk * -sn,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vanishes_at_and_beyond_support_edges() {
        let u = make_bump::<2>(0.2, 0.8, Modulation::None).unwrap();
        for r in [0.0, 0.1, 0.2, 0.8, 0.9] {
            let j = u.jet(&Vector::<2>::new(r, 0.0));
            assert!(j.re.is_zero() && j.im.is_zero());
        }
        assert!(make_bump::<2>(0.5, 0.4, Modulation::None).is_err());
        assert!(make_bump::<2>(0.0, 0.4, Modulation::None).is_err());
    }

    #[test]
    fn gradient_and_hessian_match_finite_differences() {
        let u = make_bump::<2>(
            0.2,
            0.8,
            Modulation::PlaneWave {
                wavevector: [3.0, -1.0],
            },
        )
        .unwrap();
        let x = Vector::<2>::new(0.3, 0.35);
        let j = u.jet(&x);
        let h = 1e-6;
        for k in 0..2 {
            let e = Vector::<2>::from_fn(|i, _| if i == k { h } else { 0.0 });
            let fd = (u.value(&(x + e)) - u.value(&(x - e))) / (2.0 * h);
            assert!((j.re.grad[k] - fd.re).abs() < 1e-6 * j.re.grad.norm());
            assert!((j.im.grad[k] - fd.im).abs() < 1e-6 * j.im.grad.norm());
            let gp = u.jet(&(x + e));
            let gm = u.jet(&(x - e));
            let col = (gp.re.grad - gm.re.grad) / (2.0 * h);
            assert!((j.re.hess.column(k) - col).norm() < 1e-5 * j.re.hess.norm());
        }
    }

    #[test]
    fn offset_profile_agrees_with_direct_profile() {
        let u = make_bump::<2>(0.2, 0.8, Modulation::None).unwrap();
        for (r, d) in [
            (0.5, 0.1),
            (0.3, -0.05),
            (0.7, 0.05),
            (0.25, -0.05),
            (0.5, 0.4),
        ] {
            let a = u.ln_profile_offset(r, d);
            let b = u.ln_profile(r + d);
            assert!(a == b || ((a - b) / b).abs() < 1e-13, "{r} {d} {a} {b}");
        }
    }

    #[test]
    fn plane_wave_modulus_is_profile() {
        let u = make_bump::<3>(
            0.3,
            0.7,
            Modulation::PlaneWave {
                wavevector: [1.0, 2.0, 3.0],
            },
        )
        .unwrap();
        let v = make_bump::<3>(0.3, 0.7, Modulation::None).unwrap();
        let x = Vector::<3>::new(0.2, 0.3, -0.25);
        assert!((u.value(&x).norm() - v.value(&x).re).abs() < 1e-15);
        let (re, im) = u.parts();
        let z = u.value(&x);
        assert_eq!(re.value(&x).re, z.re);
        assert_eq!(im.unwrap().value(&x).re, z.im);
    }
}
