//! Problem parameters and coefficient fields with certified ellipticity and
//! Lipschitz constants.

use crate::error::{CoreError, Result};
use crate::jet::{Matrix, Vector};
use crate::linalg;
use crate::sampling::{streams, PointSampler};
use alloc::format;
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent methods shadow it whenever std is linked
use num_traits::Float;

/// Outward rounding applied to sampled certificates.
pub const CERTIFICATE_ROUNDING: f64 = 1.001;

/// Points per axis of the certification grid.
pub const CERTIFY_GRID: usize = 32;

/// `(d, ρ, ϑ₁, ϑ₂, μ, ‖b‖∞, ‖c‖∞)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ProblemParams {
    pub d: usize,
    pub rho: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub mu: f64,
    pub b_inf: f64,
    pub c_inf: f64,
}

impl ProblemParams {
    pub fn new(
        d: usize,
        rho: f64,
        theta1: f64,
        theta2: f64,
        mu: f64,
        b_inf: f64,
        c_inf: f64,
    ) -> Result<Self> {
        let bad = |name, reason: &str| {
            Err(CoreError::InvalidParameter {
                name,
                reason: reason.into(),
            })
        };
        if d == 0 {
            return bad("d", "dimension must be at least 1");
        }
        if !(rho > 0.0 && rho.is_finite()) {
            return bad("rho", "must be positive and finite");
        }
        if !(theta1 >= 1.0 && theta1.is_finite()) {
            return bad("theta1", "ellipticity constant must be >= 1");
        }
        if !(theta2 >= 0.0 && theta2.is_finite()) {
            return bad("theta2", "Lipschitz constant must be >= 0");
        }
        if !(mu > 0.0 && mu.is_finite()) {
            return bad("mu", "must be positive and finite");
        }
        if !(b_inf >= 0.0 && c_inf >= 0.0) {
            return bad("b_inf", "sup norms must be non-negative");
        }
        Ok(ProblemParams {
            d,
            rho,
            theta1,
            theta2,
            mu,
            b_inf,
            c_inf,
        })
    }

    /// Laplacian defaults: `ϑ₁ = 1`, `ϑ₂ = 0`, `ρ = 1`, `b = c = 0`.
    pub fn laplacian(d: usize, mu: f64) -> Self {
        ProblemParams {
            d,
            rho: 1.0,
            theta1: 1.0,
            theta2: 0.0,
            mu,
            b_inf: 0.0,
            c_inf: 0.0,
        }
    }

    /// `33 d ϑ₁^{11/2} ϑ₂ ρ`, the threshold `μ` has to exceed.
    pub fn mu_threshold(&self) -> f64 {
        33.0 * self.d as f64 * self.theta1.powf(5.5) * self.theta2 * self.rho
    }

    pub fn admissibility_margin(&self) -> f64 {
        self.mu - self.mu_threshold()
    }

    pub fn is_admissible(&self) -> bool {
        self.admissibility_margin() > 0.0
    }
}

/// How `A(x)` varies around `A0 = A(0)`.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldFamily<const D: usize> {
    Constant,
    /// `A(x) = A0 + Σ_k x_k G_k`.
    Affine {
        slopes: [Matrix<D>; D],
    },
    /// `A(x) = A0 + Σ_k sin(ω x_k) G_k`.
    Sinusoidal {
        slopes: [Matrix<D>; D],
        frequency: f64,
    },
}

/// First order coefficient `b`.
#[derive(Debug, Clone, PartialEq)]
pub enum Drift<const D: usize> {
    Zero,
    Constant(Vector<D>),
    /// `b(x) = a (cos x₁, sin x₁, 0, …)`; in one dimension `a cos x₁`.
    Rotating {
        amplitude: f64,
    },
}

impl<const D: usize> Drift<D> {
    pub fn eval(&self, x: &Vector<D>) -> Vector<D> {
        match self {
            Drift::Zero => Vector::zeros(),
            Drift::Constant(v) => *v,
            Drift::Rotating { amplitude } => {
                let mut b = Vector::zeros();
                b[0] = amplitude * x[0].cos();
                if D > 1 {
                    b[1] = amplitude * x[0].sin();
                }
                b
            }
        }
    }

    pub fn sup_norm(&self) -> f64 {
        match self {
            Drift::Zero => 0.0,
            Drift::Constant(v) => v.norm(),
            Drift::Rotating { amplitude } => amplitude.abs(),
        }
    }
}

/// Zeroth order coefficient `c`.
#[derive(Debug, Clone, PartialEq)]
pub enum Potential<const D: usize> {
    Zero,
    Constant(f64),
    /// `c(x) = a cos(kᵀx)`.
    Cosine {
        amplitude: f64,
        wavevector: Vector<D>,
    },
}

impl<const D: usize> Potential<D> {
    pub fn eval(&self, x: &Vector<D>) -> f64 {
        match self {
            Potential::Zero => 0.0,
            Potential::Constant(c) => *c,
            Potential::Cosine {
                amplitude,
                wavevector,
            } => amplitude * wavevector.dot(x).cos(),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        match self {
            Potential::Zero => 0.0,
            Potential::Constant(c) => c.abs(),
            Potential::Cosine { amplitude, .. } => amplitude.abs(),
        }
    }
}

/// `A(x)` together with all its first partial derivatives at one point.
#[derive(Debug, Clone, Copy)]
pub struct FieldPoint<const D: usize> {
    pub a: Matrix<D>,
    /// `da[k] = ∂_k A`.
    pub da: [Matrix<D>; D],
}

impl<const D: usize> FieldPoint<D> {
    /// `(div A)_j = Σ_i ∂_i a^{ij}`.
    pub fn div_a(&self) -> Vector<D> {
        Vector::from_fn(|j, _| (0..D).map(|i| self.da[i][(i, j)]).sum())
    }

    /// `Σ_k v_k ∂_k A`.
    pub fn directional(&self, v: &Vector<D>) -> Matrix<D> {
        (0..D).fold(Matrix::zeros(), |acc, k| acc + self.da[k] * v[k])
    }

    pub fn constant(a: Matrix<D>) -> Self {
        FieldPoint {
            a,
            da: [Matrix::zeros(); D],
        }
    }
}

/// An analytic symmetric coefficient field on `B_ρ` plus lower order terms.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientField<const D: usize> {
    a0: Matrix<D>,
    family: FieldFamily<D>,
    drift: Drift<D>,
    potential: Potential<D>,
    radius: f64,
    certified_theta1: f64,
    certified_theta2: f64,
}

impl<const D: usize> CoefficientField<D> {
    pub fn a0(&self) -> &Matrix<D> {
        &self.a0
    }

    pub fn family(&self) -> &FieldFamily<D> {
        &self.family
    }

    pub fn drift(&self) -> &Drift<D> {
        &self.drift
    }

    pub fn potential(&self) -> &Potential<D> {
        &self.potential
    }

    /// Radius of the ball the certificates refer to.
    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn certified_theta1(&self) -> f64 {
        self.certified_theta1
    }

    pub fn certified_theta2(&self) -> f64 {
        self.certified_theta2
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.family, FieldFamily::Constant)
    }

    pub fn matrix(&self, x: &Vector<D>) -> Matrix<D> {
        match &self.family {
            FieldFamily::Constant => self.a0,
            FieldFamily::Affine { slopes } => (0..D).fold(self.a0, |acc, k| acc + slopes[k] * x[k]),
            FieldFamily::Sinusoidal { slopes, frequency } => {
                (0..D).fold(self.a0, |acc, k| acc + slopes[k] * (frequency * x[k]).sin())
            }
        }
    }

    pub fn derivatives(&self, x: &Vector<D>) -> [Matrix<D>; D] {
        match &self.family {
            FieldFamily::Constant => [Matrix::zeros(); D],
            FieldFamily::Affine { slopes } => *slopes,
            FieldFamily::Sinusoidal { slopes, frequency } => {
                core::array::from_fn(|k| slopes[k] * (frequency * (frequency * x[k]).cos()))
            }
        }
    }

    pub fn point(&self, x: &Vector<D>) -> FieldPoint<D> {
        FieldPoint {
            a: self.matrix(x),
            da: self.derivatives(x),
        }
    }

    pub fn b(&self, x: &Vector<D>) -> Vector<D> {
        self.drift.eval(x)
    }

    pub fn c(&self, x: &Vector<D>) -> f64 {
        self.potential.eval(x)
    }

    pub fn b_sup(&self) -> f64 {
        self.drift.sup_norm()
    }

    pub fn c_sup(&self) -> f64 {
        self.potential.sup_norm()
    }

    pub fn with_lower_order(mut self, drift: Drift<D>, potential: Potential<D>) -> Self {
        self.drift = drift;
        self.potential = potential;
        self
    }

    /// The field `x ↦ A(ρx)` on the unit ball, with Lipschitz certificate
    /// `ρϑ₂`. Lower order terms are dropped.
    pub fn scaled(&self, rho: f64) -> Self {
        let family = match &self.family {
            FieldFamily::Constant => FieldFamily::Constant,
            FieldFamily::Affine { slopes } => FieldFamily::Affine {
                slopes: slopes.map(|g| g * rho),
            },
            FieldFamily::Sinusoidal { slopes, frequency } => FieldFamily::Sinusoidal {
                slopes: *slopes,
                frequency: frequency * rho,
            },
        };
        CoefficientField {
            a0: self.a0,
            family,
            drift: Drift::Zero,
            potential: Potential::Zero,
            radius: self.radius / rho,
            certified_theta1: self.certified_theta1,
            certified_theta2: self.certified_theta2 * rho,
        }
    }

    /// Problem parameters using this field's certificates.
    pub fn params(&self, rho: f64, mu: f64) -> Result<ProblemParams> {
        ProblemParams::new(
            D,
            rho,
            self.certified_theta1,
            self.certified_theta2,
            mu,
            self.b_sup(),
            self.c_sup(),
        )
    }
}

fn check_symmetric<const D: usize>(m: &Matrix<D>, what: &str) -> Result<()> {
    if linalg::is_symmetric(m) {
        Ok(())
    } else {
        Err(CoreError::NotSymmetric {
            what: what.into(),
            asymmetry: linalg::asymmetry(m),
        })
    }
}

fn check_radius(rho: f64) -> Result<()> {
    if rho > 0.0 && rho.is_finite() {
        Ok(())
    } else {
        Err(CoreError::InvalidParameter {
            name: "rho",
            reason: "must be positive and finite".into(),
        })
    }
}

/// Cube grid points inside `B_ρ` plus points on the sphere `|x| = ρ`.
fn certification_points<const D: usize>(rho: f64) -> Vec<Vector<D>> {
    let n = CERTIFY_GRID;
    let total = n.pow(D as u32);
    let mut points = Vec::with_capacity(total + 4096);
    for idx in 0..total {
        let mut rest = idx;
        let x = Vector::<D>::from_fn(|_, _| {
            let i = rest % n;
            rest /= n;
            -rho + 2.0 * rho * i as f64 / (n - 1) as f64
        });
        if x.norm() <= rho {
            points.push(x);
        }
    }
    let mut sampler = PointSampler::new(0, streams::CERTIFY);
    points.extend((0..4096).map(|_| sampler.direction::<D>() * rho));
    points
}

fn certify_theta1<const D: usize>(
    matrix: impl Fn(&Vector<D>) -> Matrix<D>,
    rho: f64,
) -> Result<f64> {
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for x in certification_points::<D>(rho) {
        let (l, h) = linalg::eigen_range(&matrix(&x));
        if l <= 0.0 {
            return Err(CoreError::NotPositiveDefinite { min_eigenvalue: l });
        }
        lo = lo.min(l);
        hi = hi.max(h);
    }
    Ok((hi.max(1.0 / lo) * CERTIFICATE_ROUNDING).max(1.0))
}

/// Field with `A ≡ A0`. Its certificates are exact: `ϑ₁` from the spectrum of
/// `A0`, `ϑ₂ = 0`.
pub fn make_constant_field<const D: usize>(a0: Matrix<D>, rho: f64) -> Result<CoefficientField<D>> {
    check_radius(rho)?;
    check_symmetric(&a0, "A0")?;
    let (lo, hi) = linalg::eigen_range(&a0);
    if lo <= 0.0 {
        return Err(CoreError::NotPositiveDefinite { min_eigenvalue: lo });
    }
    let diagonal = (0..D).all(|i| (0..D).all(|j| i == j || a0[(i, j)] == 0.0));
    let raw = hi.max(1.0 / lo).max(1.0);
    // eigenvalues of a diagonal matrix are exact; otherwise allow a few ulps
    let theta1 = if diagonal || raw == 1.0 {
        raw
    } else {
        raw * (1.0 + 1e-12)
    };
    Ok(CoefficientField {
        a0,
        family: FieldFamily::Constant,
        drift: Drift::Zero,
        potential: Potential::Zero,
        radius: rho,
        certified_theta1: theta1,
        certified_theta2: 0.0,
    })
}

/// `A(x) = A0 + Σ_k x_k G_k` on `B_ρ`.
///
/// `ϑ₁` comes from eigenvalue extrema over a dense sample of `B_ρ` and its
/// boundary, rounded outward by [`CERTIFICATE_ROUNDING`]; `ϑ₂` is the exact
/// `sup_{|v|=1} ‖Σ v_k G_k‖∞`, rounded the same way. All-zero slopes give the
/// constant field.
pub fn make_affine_field<const D: usize>(
    a0: Matrix<D>,
    slopes: [Matrix<D>; D],
    rho: f64,
) -> Result<CoefficientField<D>> {
    check_radius(rho)?;
    check_symmetric(&a0, "A0")?;
    for (k, g) in slopes.iter().enumerate() {
        check_symmetric(g, &format!("G_{}", k + 1))?;
    }
    if slopes.iter().all(|g| g.iter().all(|v| *v == 0.0)) {
        return make_constant_field(a0, rho);
    }
    linalg::spd_inverse(&a0)?;
    let matrix = |x: &Vector<D>| (0..D).fold(a0, |acc, k| acc + slopes[k] * x[k]);
    let theta1 = certify_theta1::<D>(matrix, rho)?;
    let theta2 = linalg::directional_row_sum_bound(&slopes) * CERTIFICATE_ROUNDING;
    Ok(CoefficientField {
        a0,
        family: FieldFamily::Affine { slopes },
        drift: Drift::Zero,
        potential: Potential::Zero,
        radius: rho,
        certified_theta1: theta1,
        certified_theta2: theta2,
    })
}

/// `A(x) = A0 + Σ_k sin(ω x_k) G_k` on `B_ρ`.
pub fn make_sinusoidal_field<const D: usize>(
    a0: Matrix<D>,
    slopes: [Matrix<D>; D],
    frequency: f64,
    rho: f64,
) -> Result<CoefficientField<D>> {
    check_radius(rho)?;
    check_symmetric(&a0, "A0")?;
    for (k, g) in slopes.iter().enumerate() {
        check_symmetric(g, &format!("G_{}", k + 1))?;
    }
    if !(frequency > 0.0 && frequency.is_finite()) {
        return Err(CoreError::InvalidParameter {
            name: "frequency",
            reason: "must be positive".into(),
        });
    }
    linalg::spd_inverse(&a0)?;
    let matrix =
        |x: &Vector<D>| (0..D).fold(a0, |acc, k| acc + slopes[k] * (frequency * x[k]).sin());
    let theta1 = certify_theta1::<D>(matrix, rho)?;
    let theta2 = frequency * linalg::modulated_row_sum_bound(&slopes) * CERTIFICATE_ROUNDING;
    Ok(CoefficientField {
        a0,
        family: FieldFamily::Sinusoidal { slopes, frequency },
        drift: Drift::Zero,
        potential: Potential::Zero,
        radius: rho,
        certified_theta1: theta1,
        certified_theta2: theta2,
    })
}

/// Sampled evidence for (or against) the ellipticity / Lipschitz assumption.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AssumptionReport {
    pub claimed_theta1: f64,
    pub claimed_theta2: f64,
    /// Largest `max(ξᵀAξ/|ξ|², |ξ|²/ξᵀAξ)` seen.
    pub worst_ellipticity: f64,
    /// Largest `‖A(x) − A(y)‖∞ / |x − y|` seen.
    pub worst_lipschitz: f64,
    pub samples: usize,
    pub passed: bool,
}

pub fn verify_assumption<const D: usize>(
    field: &CoefficientField<D>,
    params: &ProblemParams,
    n_samples: usize,
    sampler: &mut PointSampler,
) -> AssumptionReport {
    let n = n_samples.max(1);
    let mut worst_ellipticity = 1.0f64;
    let mut worst_lipschitz = 0.0f64;
    for _ in 0..n {
        let x = sampler.ball::<D>(params.rho);
        let xi = sampler.direction::<D>();
        let form = xi.dot(&(field.matrix(&x) * xi)) / xi.dot(&xi);
        worst_ellipticity = worst_ellipticity.max(form.max(1.0 / form));

        let y = sampler.ball::<D>(params.rho);
        let dist = (x - y).norm();
        if dist > 0.0 {
            let q = linalg::row_sum_norm(&(field.matrix(&x) - field.matrix(&y))) / dist;
            worst_lipschitz = worst_lipschitz.max(q);
        }
    }
    let passed = params.theta1 >= 1.0
        && worst_ellipticity <= params.theta1
        && worst_lipschitz <= params.theta2;
    AssumptionReport {
        claimed_theta1: params.theta1,
        claimed_theta2: params.theta2,
        worst_ellipticity,
        worst_lipschitz,
        samples: n,
        passed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity_field<const D: usize>() -> CoefficientField<D> {
        make_affine_field(Matrix::<D>::identity(), [Matrix::<D>::zeros(); D], 1.0).unwrap()
    }

    #[test]
    fn identity_field_has_trivial_certificates() {
        let f = identity_field::<3>();
        assert_eq!(f.certified_theta1(), 1.0);
        assert_eq!(f.certified_theta2(), 0.0);
        assert_eq!(
            f.matrix(&Vector::<3>::new(0.3, -0.2, 0.1)),
            Matrix::<3>::identity()
        );
    }

    #[test]
    fn diagonal_a0_theta1_is_eigenvalue_extreme() {
        let f = make_constant_field(Matrix::<2>::new(2.0, 0.0, 0.0, 0.5), 1.0).unwrap();
        assert_eq!(f.certified_theta1(), 2.0);
    }

    #[test]
    fn a0_is_returned_exactly_at_origin() {
        let a0 = Matrix::<2>::new(1.5, 0.2, 0.2, 0.9);
        let slopes = [
            Matrix::<2>::new(0.1, 0.0, 0.0, -0.1),
            Matrix::<2>::new(0.0, 0.05, 0.05, 0.0),
        ];
        let f = make_affine_field(a0, slopes, 1.0).unwrap();
        assert_eq!(f.matrix(&Vector::<2>::zeros()), a0);
        let s = make_sinusoidal_field(a0, slopes, 2.0, 1.0).unwrap();
        assert_eq!(s.matrix(&Vector::<2>::zeros()), a0);
    }

    #[test]
    fn rejects_non_symmetric_and_indefinite() {
        let bad = Matrix::<2>::new(1.0, 0.5, 0.0, 1.0);
        assert!(matches!(
            make_constant_field(bad, 1.0),
            Err(CoreError::NotSymmetric { .. })
        ));
        let slopes = [Matrix::<2>::identity() * 2.0, Matrix::<2>::zeros()];
        assert!(matches!(
            make_affine_field(Matrix::<2>::identity(), slopes, 1.0),
            Err(CoreError::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn affine_theta2_matches_pairwise_sampling() {
        let slopes = [Matrix::<2>::identity() * 0.1, Matrix::<2>::zeros()];
        let f = make_affine_field(Matrix::<2>::identity(), slopes, 1.0).unwrap();
        let mut s = PointSampler::new(11, 0);
        let mut best = 0.0f64;
        for _ in 0..10_000 {
            let x = s.ball::<2>(1.0);
            let y = s.ball::<2>(1.0);
            let q = linalg::row_sum_norm(&(f.matrix(&x) - f.matrix(&y))) / (x - y).norm();
            best = best.max(q);
        }
        assert!(best <= f.certified_theta2());
        // the sampled sup approaches 0.1 for nearly axis-aligned pairs
        assert!(best > 0.0999 && f.certified_theta2() < 0.1002);
    }

    #[test]
    fn verify_assumption_examples() {
        let f = identity_field::<2>();
        let ok = ProblemParams::new(2, 1.0, 1.0, 0.0, 1.0, 0.0, 0.0).unwrap();
        let mut s = PointSampler::new(3, streams::ASSUMPTION);
        assert!(verify_assumption(&f, &ok, 1000, &mut s).passed);

        let mut claimed = ok;
        claimed.theta1 = 0.5;
        assert!(!verify_assumption(&f, &claimed, 1000, &mut s).passed);

        let slopes = [Matrix::<2>::identity() * 0.1, Matrix::<2>::zeros()];
        let g = make_affine_field(Matrix::<2>::identity(), slopes, 1.0).unwrap();
        let p = g.params(1.0, 1.0).unwrap();
        assert!(verify_assumption(&g, &p, 10_000, &mut s).passed);
    }

    #[test]
    fn sampled_eigenvalues_inside_certificate() {
        let a0 = Matrix::<3>::new(1.2, 0.1, 0.0, 0.1, 0.9, 0.05, 0.0, 0.05, 1.1);
        let g = Matrix::<3>::new(0.05, 0.01, 0.0, 0.01, -0.03, 0.0, 0.0, 0.0, 0.02);
        let f = make_affine_field(a0, [g, g * -0.5, g * 0.3], 1.0).unwrap();
        let t = f.certified_theta1();
        let mut s = PointSampler::new(5, 0);
        for _ in 0..2000 {
            let (lo, hi) = linalg::eigen_range(&f.matrix(&s.ball::<3>(1.0)));
            assert!(lo >= 1.0 / t && hi <= t);
        }
    }

    #[test]
    fn scaled_field_multiplies_lipschitz_by_rho() {
        let slopes = [Matrix::<2>::identity() * 0.1, Matrix::<2>::zeros()];
        let f = make_affine_field(Matrix::<2>::identity(), slopes, 2.0).unwrap();
        let g = f.scaled(2.0);
        assert_eq!(g.certified_theta2(), 2.0 * f.certified_theta2());
        let x = Vector::<2>::new(0.3, 0.4);
        assert_eq!(g.matrix(&x), f.matrix(&(x * 2.0)));
    }

    #[test]
    fn admissibility_threshold() {
        let p = ProblemParams::new(2, 1.0, 1.0, 0.01, 1.0, 0.0, 0.0).unwrap();
        assert!((p.mu_threshold() - 0.66).abs() < 1e-12);
        assert!(p.is_admissible());
        let q = ProblemParams { mu: 0.5, ..p };
        assert!(!q.is_admissible());
    }
}
