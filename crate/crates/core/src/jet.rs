//! Second order jets: value, gradient and Hessian of a function at a point.

use nalgebra::{SMatrix, SVector};
use num_complex::Complex64;

pub type Vector<const D: usize> = SVector<f64, D>;
pub type Matrix<const D: usize> = SMatrix<f64, D, D>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet<const D: usize> {
    pub value: f64,
    pub grad: Vector<D>,
    pub hess: Matrix<D>,
}

impl<const D: usize> Jet<D> {
    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn constant(value: f64) -> Self {
        Jet {
            value,
            grad: Vector::zeros(),
            hess: Matrix::zeros(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Jet {
            value: self.value * s,
            grad: self.grad * s,
            hess: self.hess * s,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Jet {
            value: self.value + other.value,
            grad: self.grad + other.grad,
            hess: self.hess + other.hess,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    /// Product rule.
    pub fn mul(&self, other: &Self) -> Self {
        let cross = self.grad * other.grad.transpose();
        Jet {
            value: self.value * other.value,
            grad: self.grad * other.value + other.grad * self.value,
            hess: self.hess * other.value + other.hess * self.value + cross + cross.transpose(),
        }
    }

    /// Chain rule for `f ∘ self`, given `f`, `f'` and `f''` at `self.value`.
    pub fn compose(&self, f: f64, f1: f64, f2: f64) -> Self {
        Jet {
            value: f,
            grad: self.grad * f1,
            hess: self.grad * self.grad.transpose() * f2 + self.hess * f1,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0.0
            && self.grad.iter().all(|v| *v == 0.0)
            && self.hess.iter().all(|v| *v == 0.0)
    }
}

/// Jet of a complex valued function, stored as real and imaginary parts.
///
/// Coefficients `A`, `b`, `c` are real, so every operator acts on the two
/// parts independently.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexJet<const D: usize> {
    pub re: Jet<D>,
    pub im: Jet<D>,
}

impl<const D: usize> ComplexJet<D> {
    pub fn zero() -> Self {
        Self::real(Jet::zero())
    }

    pub fn real(re: Jet<D>) -> Self {
        ComplexJet {
            re,
            im: Jet::zero(),
        }
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value, self.im.value)
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn modulus_sq(&self) -> f64 {
        self.re.value * self.re.value + self.im.value * self.im.value
    }

    pub fn mul(&self, other: &Self) -> Self {
        ComplexJet {
            re: self.re.mul(&other.re).sub(&self.im.mul(&other.im)),
            im: self.re.mul(&other.im).add(&self.im.mul(&other.re)),
        }
    }

    /// Product with a real jet.
    pub fn mul_real(&self, other: &Jet<D>) -> Self {
        ComplexJet {
            re: self.re.mul(other),
            im: self.im.mul(other),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        ComplexJet {
            re: self.re.scale(s),
            im: self.im.scale(s),
        }
    }

    /// `∇uᵀ M ∇ū` for a real symmetric `M`.
    pub fn grad_form(&self, m: &Matrix<D>) -> f64 {
        self.re.grad.dot(&(m * self.re.grad)) + self.im.grad.dot(&(m * self.im.grad))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadratic() -> Jet<2> {
        // x1² + 3 x1 x2 at (1, 2)
        Jet {
            value: 7.0,
            grad: Vector::<2>::new(8.0, 3.0),
            hess: Matrix::<2>::new(2.0, 3.0, 3.0, 0.0),
        }
    }

    #[test]
    fn product_rule_on_square() {
        let q = quadratic();
        let sq = q.mul(&q);
        assert_eq!(sq.value, 49.0);
        assert_eq!(sq.grad, Vector::<2>::new(112.0, 42.0));
        // 2 ∇q∇qᵀ + 2 q H
        let expected = q.grad * q.grad.transpose() * 2.0 + q.hess * 14.0;
        assert_eq!(sq.hess, expected);
    }

    #[test]
    fn compose_matches_product_for_square() {
        let q = quadratic();
        let a = q.compose(q.value * q.value, 2.0 * q.value, 2.0);
        let b = q.mul(&q);
        assert_eq!(a.value, b.value);
        assert_eq!(a.grad, b.grad);
        assert!((a.hess - b.hess).norm() < 1e-12);
    }

    #[test]
    fn complex_product_of_conjugates_is_modulus() {
        let z = ComplexJet {
            re: quadratic(),
            im: quadratic().scale(0.5),
        };
        let conj = ComplexJet {
            re: z.re,
            im: z.im.scale(-1.0),
        };
        let p = z.mul(&conj);
        assert!(p.im.value.abs() < 1e-12);
        assert!((p.re.value - z.modulus_sq()).abs() < 1e-12);
    }
}
