//! Pointwise differential objects built from `A`, its derivatives and a
//! radial-type function `g ∈ {σ, w}`: `L₀g`, `F_g`, `h_g`, `D(h_g)`, `M_g`.

use crate::constants::{pointwise_constants, PointwiseConstants};
use crate::error::{CoreError, Result};
use crate::exec::Executor;
use crate::jet::{ComplexJet, Jet, Matrix, Vector};
use crate::linalg;
use crate::params::{CoefficientField, FieldPoint};
use crate::sampling::PointSampler;
use crate::weight::{psi, psi_prime, WeightFunction};
use alloc::vec::Vec;
use num_complex::Complex64;

/// Smallest `∇gᵀA∇g` accepted before a point is declared degenerate.
pub const DEGENERACY_THRESHOLD: f64 = 1e-14;

/// `L₀u = −div(A∇u)` for a real jet, expanded by the product rule.
pub fn l0<const D: usize>(point: &FieldPoint<D>, u: &Jet<D>) -> f64 {
    -point.div_a().dot(&u.grad) - point.a.component_mul(&u.hess).sum()
}

pub fn apply_l0<const D: usize>(point: &FieldPoint<D>, u: &ComplexJet<D>) -> Complex64 {
    Complex64::new(l0(point, &u.re), l0(point, &u.im))
}

/// `Lu = L₀u + bᵀ∇u + cu`.
pub fn apply_l<const D: usize>(
    point: &FieldPoint<D>,
    b: &Vector<D>,
    c: f64,
    u: &ComplexJet<D>,
) -> Complex64 {
    let first = Complex64::new(b.dot(&u.re.grad), b.dot(&u.im.grad));
    apply_l0(point, u) + first + u.value() * c
}

/// Which function the objects are built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Radial {
    Sigma,
    W,
}

/// All objects attached to one `g` at one point.
#[derive(Debug, Clone, Copy)]
pub struct GeometricObjects<const D: usize> {
    pub g: Jet<D>,
    /// `∇gᵀA∇g`.
    pub q: f64,
    pub l0: f64,
    /// `F_g = −gL₀g/q − 1`.
    pub f: f64,
    /// `h_g = gA∇g/q`.
    pub h: Vector<D>,
    /// `D(h_g)_{ij} = ∂_i (h_g)_j`.
    pub dh: Matrix<D>,
    /// Entrywise divergence of `h_g ∘ A`.
    pub div_ha: Matrix<D>,
    pub m: Matrix<D>,
    /// Sum of the magnitudes of the terms of `M_g`.
    pub m_scale: f64,
}

impl<const D: usize> GeometricObjects<D> {
    pub fn new(point: &FieldPoint<D>, g: &Jet<D>) -> Result<Self> {
        let a = &point.a;
        let a_grad = a * g.grad;
        let q = g.grad.dot(&a_grad);
        if !(q >= DEGENERACY_THRESHOLD) {
            return Err(CoreError::DegeneratePoint { value: q });
        }
        let l0 = l0(point, g);
        let f = -g.value * l0 / q - 1.0;
        let h = a_grad * (g.value / q);
        let ha = g.hess * a;
        // P_{ij} = ∂_i (A∇g)_j
        let p = Matrix::<D>::from_fn(|i, j| (point.da[i] * g.grad)[j] + ha[(i, j)]);
        let dq = Vector::<D>::from_fn(|i, _| {
            g.grad.dot(&(point.da[i] * g.grad)) + 2.0 * (ha * g.grad)[i]
        });
        let dh = (g.grad * a_grad.transpose() + p * g.value) / q
            - dq * a_grad.transpose() * (g.value / (q * q));
        let div_ha = a * dh.trace() + point.directional(&h);
        let ad = a * dh;
        let m = (-a * f + div_ha - ad - ad.transpose()) * 0.5;
        let m_scale = 0.5 * f.abs() * a.norm() + 0.5 * div_ha.norm() + ad.norm();
        Ok(GeometricObjects {
            g: *g,
            q,
            l0,
            f,
            h,
            dh,
            div_ha,
            m,
            m_scale,
        })
    }

    /// Rellich matrix `B = div(h∘A) − AD(h) − D(h)ᵀA`.
    pub fn rellich(&self, a: &Matrix<D>) -> Matrix<D> {
        let ad = a * self.dh;
        self.div_ha - ad - ad.transpose()
    }

    /// Magnitude of the terms entering `F_g`.
    pub fn f_scale(&self) -> f64 {
        (self.g.value * self.l0 / self.q).abs() + 1.0
    }
}

/// Objects for `g = σ` or `g = w` at `x`.
pub fn diff_objects<const D: usize>(
    field: &CoefficientField<D>,
    weight: &WeightFunction<D>,
    x: &Vector<D>,
    which: Radial,
) -> Result<GeometricObjects<D>> {
    let g = match which {
        Radial::Sigma => weight.sigma_jet(x)?,
        Radial::W => weight.w_jet(x)?,
    };
    GeometricObjects::new(&field.point(x), &g)
}

/// `D_f = w ∇fᵀA∇w / (∇wᵀA∇w) + ½ f F_w`.
pub fn d_f_value<const D: usize>(a: &Matrix<D>, w: &GeometricObjects<D>, f: &Jet<D>) -> f64 {
    w.g.value * f.grad.dot(&(a * w.g.grad)) / w.q + 0.5 * f.value * w.f
}

/// `∇̃f = ∇f − (∇wᵀA∇f / ∇wᵀA∇w) ∇w`, the part of `∇f` that is
/// `A`-orthogonal to `∇w`.
pub fn tilde_gradient<const D: usize>(
    a: &Matrix<D>,
    w: &GeometricObjects<D>,
    grad_f: &Vector<D>,
) -> Vector<D> {
    grad_f - w.g.grad * (w.g.grad.dot(&(a * grad_f)) / w.q)
}

/// Maximum relative residual of each of the five relations.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WeightIdentityResiduals {
    /// `M_w = ψM_σ + sψ'(s)[A − A∇σ∇σᵀA/q_σ]`.
    pub m_w: f64,
    /// `M_σ^{A0} = 0`.
    pub m_sigma_a0: f64,
    /// `M_σ∇σ = 0`.
    pub m_sigma_grad: f64,
    /// `F_w = ψF_σ − sψ'(s)`.
    pub f_w: f64,
    /// `F_σ^{A0} = d − 2`.
    pub f_sigma_a0: f64,
}

impl WeightIdentityResiduals {
    pub fn max(&self) -> f64 {
        [
            self.m_w,
            self.m_sigma_a0,
            self.m_sigma_grad,
            self.f_w,
            self.f_sigma_a0,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    fn merge(self, o: Self) -> Self {
        WeightIdentityResiduals {
            m_w: self.m_w.max(o.m_w),
            m_sigma_a0: self.m_sigma_a0.max(o.m_sigma_a0),
            m_sigma_grad: self.m_sigma_grad.max(o.m_sigma_grad),
            f_w: self.f_w.max(o.f_w),
            f_sigma_a0: self.f_sigma_a0.max(o.f_sigma_a0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IdentityReport {
    pub points: usize,
    pub residuals: WeightIdentityResiduals,
    /// Largest `‖M − Mᵀ‖` over `M_σ`, `M_w`, relative to their scale.
    pub symmetry: f64,
    pub tolerance: f64,
    pub passed: bool,
}

pub const WEIGHT_IDENTITY_TOLERANCE: f64 = 1e-7;

/// Residuals of the five relations at `x`. `psi_factor` multiplies `ψ` on
/// the right-hand sides (`1` for the true identity).
pub fn weight_identity_residuals<const D: usize>(
    field: &CoefficientField<D>,
    weight: &WeightFunction<D>,
    x: &Vector<D>,
    psi_factor: f64,
) -> Result<(WeightIdentityResiduals, f64)> {
    let sig = diff_objects(field, weight, x, Radial::Sigma)?;
    let w = diff_objects(field, weight, x, Radial::W)?;
    let sig0 = GeometricObjects::new(&FieldPoint::constant(*field.a0()), &sig.g)?;
    let a = field.matrix(x);
    let s = sig.g.value / weight.rho();
    let ps = psi(s, weight.mu()) * psi_factor;
    let sps = s * psi_prime(s, weight.mu()) * psi_factor;

    let a_grad = a * sig.g.grad;
    let bracket = a - a_grad * a_grad.transpose() / sig.q;
    let m_rhs = sig.m * ps + bracket * sps;
    let m_scale = w.m_scale.max(ps * sig.m_scale).max(sps * a.norm());
    let f_rhs = ps * sig.f - sps;
    let f_scale = w.f_scale().max(ps * sig.f_scale()).max(sps);
    let d = D as f64;

    let residuals = WeightIdentityResiduals {
        m_w: (w.m - m_rhs).norm() / m_scale,
        m_sigma_a0: sig0.m.norm() / sig0.m_scale,
        m_sigma_grad: (sig.m * sig.g.grad).norm() / (sig.m_scale * sig.g.grad.norm()),
        f_w: (w.f - f_rhs).abs() / f_scale,
        f_sigma_a0: (sig0.f - (d - 2.0)).abs() / sig0.f_scale(),
    };
    let symmetry =
        (linalg::asymmetry(&sig.m) / sig.m_scale).max(linalg::asymmetry(&w.m) / w.m_scale);
    Ok((residuals, symmetry))
}

pub fn check_weight_identities<const D: usize, E: Executor>(
    field: &CoefficientField<D>,
    weight: &WeightFunction<D>,
    points: &[Vector<D>],
    psi_factor: f64,
    exec: &E,
) -> Result<IdentityReport> {
    let per_point = exec.map(points.len(), |i| {
        weight_identity_residuals(field, weight, &points[i], psi_factor)
    });
    let mut residuals = WeightIdentityResiduals::default();
    let mut symmetry = 0.0f64;
    for r in per_point {
        let (res, sym) = r?;
        residuals = residuals.merge(res);
        symmetry = symmetry.max(sym);
    }
    Ok(IdentityReport {
        points: points.len(),
        residuals,
        symmetry,
        tolerance: WEIGHT_IDENTITY_TOLERANCE,
        passed: residuals.max() < WEIGHT_IDENTITY_TOLERANCE && symmetry < 1e-10,
    })
}

/// Interior sampling annulus `|x| ∈ [0.05ρ, 0.95ρ]` used by the pointwise
/// checks.
pub fn sample_points<const D: usize>(
    sampler: &mut PointSampler,
    n: usize,
    rho: f64,
) -> Vec<Vector<D>> {
    sampler.annulus_points(n, 0.05 * rho, 0.95 * rho)
}

/// Violation counts and worst slacks (`bound − value`) for the four bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundReport {
    pub points: usize,
    pub directions: usize,
    pub constants: PointwiseConstants,
    /// `[B_σ, M_σ, F_w, L₀ψ(σ)]`.
    pub violations: [usize; 4],
    pub worst_slack: [f64; 4],
    /// Largest `value / bound` where the bound is positive.
    pub worst_ratio: [f64; 4],
    /// Points where the matrix bound was also checked by generalized
    /// eigenvalues.
    pub eigen_checked: usize,
    pub passed: bool,
}

/// Absolute allowance per unit of term scale for rounding in the bounds.
pub const POINTWISE_ROUNDOFF: f64 = 1e-12;

#[derive(Debug, Clone, Copy)]
struct PointBounds {
    violations: [usize; 4],
    slack: [f64; 4],
    ratio: [f64; 4],
    eigen: bool,
}

/// Checks the four pointwise bounds on the unit ball for the field rescaled
/// to `x ↦ A(ρx)`; `points` and `directions` refer to the unit ball.
#[allow(clippy::too_many_arguments)]
pub fn check_pointwise_bounds<const D: usize, E: Executor>(
    field: &CoefficientField<D>,
    rho: f64,
    mu: f64,
    points: &[Vector<D>],
    directions: &[Vector<D>],
    per_point: usize,
    eigen_every: usize,
    exec: &E,
) -> Result<BoundReport> {
    let scaled = field.scaled(rho);
    let weight = WeightFunction::new(&scaled, 1.0, mu)?;
    let theta1 = scaled.certified_theta1();
    let c = pointwise_constants(D, theta1, scaled.certified_theta2(), mu);
    let sig0_point = FieldPoint::constant(*scaled.a0());
    let k = per_point.max(1);

    let results = exec.map(points.len(), |i| -> Result<PointBounds> {
        let x = &points[i];
        let point = scaled.point(x);
        let sig = GeometricObjects::new(&point, &weight.sigma_jet(x)?)?;
        let sig0 = GeometricObjects::new(&sig0_point, &sig.g)?;
        let w = GeometricObjects::new(&point, &weight.w_jet(x)?)?;
        let psi_l0 = l0(&point, &weight.psi_jet(x)?);
        let s = sig.g.value;
        let mut out = PointBounds {
            violations: [0; 4],
            slack: [f64::INFINITY; 4],
            ratio: [0.0; 4],
            eigen: false,
        };
        let mut record = |k: usize, value: f64, bound: f64, scale: f64| {
            let slack = bound - value;
            if slack < -POINTWISE_ROUNDOFF * scale {
                out.violations[k] += 1;
            }
            out.slack[k] = out.slack[k].min(slack);
            if bound > 0.0 {
                out.ratio[k] = out.ratio[k].max(value / bound);
            }
        };
        record(
            0,
            (sig.f - sig0.f).abs(),
            s * c.c_f_prime,
            sig.f_scale() + sig0.f_scale(),
        );
        for j in 0..k {
            let xi = &directions[(i * k + j) % directions.len()];
            let form = xi.dot(&(point.a * xi));
            record(
                1,
                xi.dot(&(sig.m * xi)).abs(),
                s * c.c_m * form,
                sig.m_scale * xi.norm_squared(),
            );
        }
        if eigen_every > 0 && i % eigen_every == 0 {
            if let Some(r) = linalg::generalized_spectral_radius(&sig.m, &point.a) {
                record(1, r, s * c.c_m, sig.m_scale * theta1);
                out.eigen = true;
            }
        }
        record(2, w.f.abs(), c.c_f, w.f_scale());
        record(3, psi_l0.abs(), c.c_psi / s, psi_l0.abs().max(1.0));
        Ok(out)
    });

    let mut violations = [0usize; 4];
    let mut worst_slack = [f64::INFINITY; 4];
    let mut worst_ratio = [0.0f64; 4];
    let mut eigen_checked = 0;
    for r in results {
        let r = r?;
        for k in 0..4 {
            violations[k] += r.violations[k];
            worst_slack[k] = worst_slack[k].min(r.slack[k]);
            worst_ratio[k] = worst_ratio[k].max(r.ratio[k]);
        }
        eigen_checked += r.eigen as usize;
    }
    Ok(BoundReport {
        points: points.len(),
        directions: k,
        constants: c,
        violations,
        worst_slack,
        worst_ratio,
        eigen_checked,
        passed: violations.iter().all(|v| *v == 0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Sequential;
    use crate::params::{make_affine_field, make_constant_field};

    fn affine2() -> CoefficientField<2> {
        let a0 = Matrix::<2>::new(1.2, 0.1, 0.1, 0.9);
        let g1 = Matrix::<2>::new(0.004, 0.001, 0.001, -0.002);
        let g2 = Matrix::<2>::new(-0.001, 0.002, 0.002, 0.003);
        make_affine_field(a0, [g1, g2], 1.0).unwrap()
    }

    #[test]
    fn l0_of_quadratic_is_minus_d() {
        let p = FieldPoint::<3>::constant(Matrix::identity());
        let u = Jet {
            value: 0.0,
            grad: Vector::<3>::new(0.1, 0.2, 0.3),
            hess: Matrix::<3>::identity(),
        };
        assert_eq!(l0(&p, &u), -3.0);
        let cu = ComplexJet::real(u);
        assert_eq!(apply_l(&p, &Vector::zeros(), 1.0, &cu).re, -3.0);
    }

    #[test]
    fn constant_field_sigma_objects() {
        let a0 = Matrix::<3>::new(1.5, 0.2, 0.0, 0.2, 1.0, 0.1, 0.0, 0.1, 0.8);
        let f = make_constant_field(a0, 1.0).unwrap();
        let w = WeightFunction::new(&f, 1.0, 1.0).unwrap();
        let x = Vector::<3>::new(0.2, -0.3, 0.4);
        let o = diff_objects(&f, &w, &x, Radial::Sigma).unwrap();
        assert!((o.h - x).norm() < 1e-14);
        assert!((o.dh - Matrix::<3>::identity()).norm() < 1e-13);
        assert!((o.f - 1.0).abs() < 1e-13);
        assert!(o.m.norm() < 1e-13);
    }

    #[test]
    fn weight_identities_hold_on_affine_field_and_breaks_under_perturbation() {
        let f = affine2();
        let w = WeightFunction::new(&f, 1.0, 1.0).unwrap();
        let pts = sample_points::<2>(&mut PointSampler::new(1, 3), 200, 1.0);
        let r = check_weight_identities(&f, &w, &pts, 1.0, &Sequential).unwrap();
        assert!(r.passed, "{r:?}");
        let bad = check_weight_identities(&f, &w, &pts, 1.01, &Sequential).unwrap();
        assert!(!bad.passed);
    }

    #[test]
    fn weight_identities_hold_for_general_rho() {
        let f = affine2();
        let w = WeightFunction::new(&f, 0.7, 1.3).unwrap();
        let pts = sample_points::<2>(&mut PointSampler::new(2, 3), 100, 0.7);
        assert!(
            check_weight_identities(&f, &w, &pts, 1.0, &Sequential)
                .unwrap()
                .passed
        );
    }

    #[test]
    fn dh_matches_finite_differences() {
        let f = affine2();
        let w = WeightFunction::new(&f, 1.0, 1.0).unwrap();
        let x = Vector::<2>::new(0.3, -0.5);
        for which in [Radial::Sigma, Radial::W] {
            let o = diff_objects(&f, &w, &x, which).unwrap();
            let step = 1e-5;
            for i in 0..2 {
                let e = Vector::<2>::from_fn(|k, _| if k == i { step } else { 0.0 });
                let hp = diff_objects(&f, &w, &(x + e), which).unwrap().h;
                let hm = diff_objects(&f, &w, &(x - e), which).unwrap().h;
                let row = (hp - hm) / (2.0 * step);
                for j in 0..2 {
                    assert!((o.dh[(i, j)] - row[j]).abs() < 1e-6 * o.dh.norm());
                }
            }
        }
    }

    #[test]
    fn f_tilde_decomposition() {
        let f = affine2();
        let w = WeightFunction::new(&f, 1.0, 1.0).unwrap();
        let x = Vector::<2>::new(0.3, 0.2);
        let o = diff_objects(&f, &w, &x, Radial::W).unwrap();
        let a = f.matrix(&x);
        let gf = Vector::<2>::new(0.7, -1.1);
        let t = tilde_gradient(&a, &o, &gf);
        let lhs = gf.dot(&(a * gf));
        let rhs = t.dot(&(a * t)) + o.g.grad.dot(&(a * gf)).powi(2) / o.q;
        assert!((lhs - rhs).abs() < 1e-12 * lhs);
    }

    #[test]
    fn pointwise_bounds_laplacian_and_affine() {
        let f = make_constant_field(Matrix::<3>::identity(), 1.0).unwrap();
        let mut s = PointSampler::new(1, 4);
        let pts = sample_points::<3>(&mut s, 500, 1.0);
        let dirs = s.directions::<3>(16 * 500);
        let r = check_pointwise_bounds(&f, 1.0, 1.0, &pts, &dirs, 16, 100, &Sequential).unwrap();
        assert!(r.passed);
        assert_eq!(r.worst_slack[0], 0.0);
        // |F_w| = |e^s(1 − s)| stays below 1 on the unit ball
        assert!(r.worst_ratio[2] * r.constants.c_f <= 1.0 + 1e-12);

        let g = affine2();
        let pts = sample_points::<2>(&mut s, 2000, 1.0);
        let dirs = s.directions::<2>(16 * 2000);
        assert!(
            check_pointwise_bounds(&g, 1.0, 1.0, &pts, &dirs, 16, 100, &Sequential)
                .unwrap()
                .passed
        );
    }
}
