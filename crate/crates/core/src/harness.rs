//! Integral statements checked by quadrature: the Carleman inequality, the
//! integral inequality behind it, the Green and Rellich identities, and the
//! pointwise conjugation identity.
//!
//! Every integral is computed twice, on a grid and on its doubled grid; the
//! doubled value is reported and the change is the convergence evidence.

use crate::calculus::{apply_l, d_f_value, l0, GeometricObjects};
use crate::constants::ConstantsReport;
use crate::error::{CoreError, Result};
use crate::exec::Executor;
use crate::jet::{Jet, Vector};
use crate::linalg;
use crate::params::CoefficientField;
use crate::quadrature::{
    adapted_grid, integrate, integrate_about, peaked_grid, QuadratureGrid, QuadratureSpec,
    RayPoint, TestFunction,
};
use crate::summation::Scaled;
use crate::weight::{phi, WeightFunction};
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent methods shadow it whenever std is linked
use num_traits::Float;

/// Largest relative change under grid doubling accepted as converged.
pub const GATE_TOLERANCE: f64 = 1e-6;
pub const CONJUGATION_TOLERANCE: f64 = 1e-6;
pub const GREEN_TOLERANCE: f64 = 1e-7;
pub const RELLICH_TOLERANCE: f64 = 1e-5;
/// Allowed negative slack relative to `|I₁|`.
pub const CONJUGATED_BOUND_TOLERANCE: f64 = 1e-6;

/// Grid-doubling evidence for one check.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Convergence {
    pub spec: QuadratureSpec,
    pub nodes: usize,
    pub doubled_nodes: usize,
    /// Largest change over the integrals of the check, relative to each
    /// integral or to the check scale.
    pub change: f64,
    pub tolerance: f64,
    pub certified: bool,
}

impl Convergence {
    fn new<const D: usize>(
        spec: &QuadratureSpec,
        base: &QuadratureGrid<D>,
        fine: &QuadratureGrid<D>,
        change: f64,
    ) -> Self {
        Convergence {
            spec: *spec,
            nodes: base.node_count(),
            doubled_nodes: fine.node_count(),
            change,
            tolerance: GATE_TOLERANCE,
            certified: change < GATE_TOLERANCE,
        }
    }

    /// Error unless certified.
    pub fn certify(&self, what: &'static str) -> Result<()> {
        if self.certified {
            Ok(())
        } else {
            Err(CoreError::NotConverged {
                what,
                change: self.change,
            })
        }
    }
}

/// `|a − b| / |scale|` in scaled arithmetic; zero when everything vanishes.
fn change_against(a: &Scaled, b: &Scaled, scale: &Scaled) -> f64 {
    if scale.is_zero() {
        return if a.is_zero() && b.is_zero() {
            0.0
        } else {
            f64::INFINITY
        };
    }
    ((a.rescaled(scale.ln_scale) - b.rescaled(scale.ln_scale)) / scale.value).abs()
}

/// `a − b` in scaled arithmetic.
fn difference(a: &Scaled, b: &Scaled) -> Scaled {
    a.add(&b.scale_by(-1.0))
}

/// `φ(s_min)` where `s_min` is the smallest `σ/ρ` on `|x| ≥ r0`.
fn weight_floor<const D: usize>(weight: &WeightFunction<D>, r0: f64) -> f64 {
    let lmin = linalg::eigen_range(weight.a0_inv()).0;
    phi(r0 * lmin.max(0.0).sqrt() / weight.rho(), weight.mu())
}

/// Per-ray part `−2α ln w(r_ref θ)` of the log factor `2 ln β − 2α ln w`.
fn ray_base<const D: usize>(
    weight: &WeightFunction<D>,
    alpha: f64,
) -> impl Fn(&Vector<D>, f64) -> f64 + Sync + Send + '_ {
    move |direction, reference| -2.0 * alpha * weight.ln_w_ray(direction, reference)
}

/// Remaining part of the log factor at a node, accurate relative to the
/// node's offset from the ray reference.
fn ln_factor<const D: usize>(
    weight: &WeightFunction<D>,
    u: &TestFunction<D>,
    alpha: f64,
    p: &RayPoint<D>,
) -> f64 {
    2.0 * u.ln_profile_offset(p.reference, p.offset)
        - 2.0 * alpha * weight.ln_w_increment(&p.direction, p.reference, p.offset)
}

/// The two sides of the Carleman inequality at one `α`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CarlemanSides {
    pub alpha: f64,
    pub alpha0: f64,
    /// `C` of the theorem.
    pub c: f64,
    /// `∫w^{1−2α}∇uᵀA∇ū`, `∫w^{−1−2α}|u|²` and `∫w^{2−2α}|Lu|²`.
    pub integrals: [Scaled; 3],
    /// `αρ²∫w^{1−2α}∇uᵀA∇ū`.
    pub lhs_grad: Scaled,
    /// `α³∫w^{−1−2α}|u|²`.
    pub lhs_u: Scaled,
    /// `Cρ⁴∫w^{2−2α}|Lu|²`.
    pub rhs: Scaled,
    /// `rhs / (lhs_grad + lhs_u)`; infinite when `u ≡ 0`.
    pub ratio: f64,
    /// Same ratio with `C̃ = C/6` in place of `C`; informational, reported
    /// only without lower order terms.
    pub tilde_ratio: Option<f64>,
    pub convergence: Convergence,
    /// `u ≡ 0`: all integrals vanish and the inequality holds trivially.
    pub vacuous: bool,
    /// `None` for `α < α₀`, where the theorem makes no claim.
    pub passed: Option<bool>,
}

/// Evaluates both sides at `alpha` with constants from `constants`.
pub fn carleman_sides<const D: usize, E: Executor>(
    field: &CoefficientField<D>,
    constants: &ConstantsReport,
    u: &TestFunction<D>,
    alpha: f64,
    spec: &QuadratureSpec,
    exec: &E,
) -> Result<CarlemanSides> {
    let params = &constants.params;
    let (c, alpha0) = constants
        .theorem_constants()
        .ok_or(CoreError::InadmissibleMu {
            margin: params.admissibility_margin(),
        })?;
    let (r0, r1) = u.support();
    if r1 > params.rho {
        return Err(CoreError::InvalidRadii { r0, r1 });
    }
    if !(alpha > 0.0) {
        return Err(CoreError::InvalidParameter {
            name: "alpha",
            reason: "must be positive".into(),
        });
    }
    let weight = WeightFunction::new(field, params.rho, params.mu)?;
    if !(weight_floor(&weight, r0) > 0.0) {
        return Err(CoreError::InvalidRadii { r0, r1 });
    }

    let integrand = |p: &RayPoint<D>| {
        let x = &p.x;
        let (_, uj) = u.scaled_jet(x)?;
        let w = weight.w(x);
        let point = field.point(x);
        let lu = apply_l(&point, &field.b(x), field.c(x), &uj);
        Some((
            ln_factor(&weight, u, alpha, p),
            [
                w * uj.grad_form(&point.a),
                uj.modulus_sq() / w,
                w * w * lu.norm_sqr(),
            ],
        ))
    };
    let exponent = 1.0 + 2.0 * alpha;
    let base = adapted_grid(&weight, exponent, u, spec)?;
    let fine = adapted_grid(&weight, exponent, u, &spec.doubled())?;
    let coarse = integrate_about(&base, exec, ray_base(&weight, alpha), integrand);
    let integrals = integrate_about(&fine, exec, ray_base(&weight, alpha), integrand);
    let change = (0..3)
        .map(|k| change_against(&coarse[k], &integrals[k], &integrals[k]))
        .fold(0.0, f64::max);
    let convergence = Convergence::new(spec, &base, &fine, change);

    let rho2 = params.rho * params.rho;
    let lhs_grad = integrals[0].scale_by(alpha * rho2);
    let lhs_u = integrals[1].scale_by(alpha * alpha * alpha);
    let rhs = integrals[2].scale_by(c * rho2 * rho2);
    let lhs = lhs_grad.add(&lhs_u);
    let vacuous = lhs.is_zero() && rhs.is_zero();
    let ratio = if vacuous {
        f64::INFINITY
    } else {
        rhs.ratio(&lhs)
    };
    let tilde_ratio = (params.b_inf == 0.0 && params.c_inf == 0.0).then(|| ratio / 6.0);
    let holds = vacuous || (convergence.certified && ratio >= 1.0);
    Ok(CarlemanSides {
        alpha,
        alpha0,
        c,
        integrals,
        lhs_grad,
        lhs_u,
        rhs,
        ratio,
        tilde_ratio,
        convergence,
        vacuous,
        passed: (alpha >= alpha0).then_some(holds),
    })
}

/// `n` geometrically spaced values from `alpha0` to `factor·alpha0`.
pub fn geometric_alphas(alpha0: f64, factor: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => alloc::vec![alpha0],
        _ => (0..n)
            .map(|i| alpha0 * factor.powf(i as f64 / (n - 1) as f64))
            .collect(),
    }
}

pub fn alpha_sweep<const D: usize, E: Executor>(
    field: &CoefficientField<D>,
    constants: &ConstantsReport,
    u: &TestFunction<D>,
    alphas: &[f64],
    spec: &QuadratureSpec,
    exec: &E,
) -> Result<Vec<CarlemanSides>> {
    alphas
        .iter()
        .map(|a| carleman_sides(field, constants, u, *a, spec, exec))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConjugationReport {
    pub alpha: f64,
    /// Points inside the support of `u`, where the identity is non-trivial.
    pub points: usize,
    pub max_residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Relative residual of `−w^{−α}L₀u = −L₀f + α²fq/w² + 2αq D_f/w²` with
/// `f = w^{−α}u` and `q = ∇wᵀA∇w`, or `None` outside the support.
///
/// Both sides are linear in `u`, so `u` and `w^{−α}` are normalized to one
/// at `x`.
pub fn conjugation_residual<const D: usize>(
    field: &CoefficientField<D>,
    weight: &WeightFunction<D>,
    u: &TestFunction<D>,
    alpha: f64,
    x: &Vector<D>,
) -> Result<Option<f64>> {
    let Some((_, uj)) = u.scaled_jet(x) else {
        return Ok(None);
    };
    let point = field.point(x);
    let wobj = GeometricObjects::new(&point, &weight.w_jet(x)?)?;
    let w = wobj.g.value;
    let pow = wobj
        .g
        .compose(1.0, -alpha / w, alpha * (alpha + 1.0) / (w * w));
    let qw = wobj.q / (w * w);
    let mut worst = 0.0f64;
    for part in [&uj.re, &uj.im] {
        let f = part.mul(&pow);
        let lhs = -l0(&point, part);
        let terms = [
            -l0(&point, &f),
            alpha * alpha * f.value * qw,
            2.0 * alpha * qw * d_f_value(&point.a, &wobj, &f),
        ];
        let scale = terms.iter().fold(lhs.abs(), |m, t| m.max(t.abs()));
        if scale > 0.0 {
            worst = worst.max((lhs - terms.iter().sum::<f64>()).abs() / scale);
        }
    }
    Ok(Some(worst))
}

pub fn check_conjugation_identity<const D: usize, E: Executor>(
    field: &CoefficientField<D>,
    weight: &WeightFunction<D>,
    u: &TestFunction<D>,
    alpha: f64,
    points: &[Vector<D>],
    exec: &E,
) -> Result<ConjugationReport> {
    let results = exec.map(points.len(), |i| {
        conjugation_residual(field, weight, u, alpha, &points[i])
    });
    let mut inside = 0;
    let mut max_residual = 0.0f64;
    for r in results {
        if let Some(v) = r? {
            inside += 1;
            max_residual = max_residual.max(v);
        }
    }
    Ok(ConjugationReport {
        alpha,
        points: inside,
        max_residual,
        tolerance: CONJUGATION_TOLERANCE,
        passed: max_residual < CONJUGATION_TOLERANCE,
    })
}

/// Two integrals that should agree, with the scale the residual is
/// measured against.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IntegralIdentity {
    pub lhs: Scaled,
    pub rhs: Scaled,
    /// Larger of the integrals of the absolute integrands.
    pub scale: Scaled,
    /// `|lhs − rhs| / scale`.
    pub residual: f64,
    pub tolerance: f64,
    pub convergence: Convergence,
    pub passed: bool,
}

fn identity_report<const D: usize>(
    spec: &QuadratureSpec,
    base: &QuadratureGrid<D>,
    fine: &QuadratureGrid<D>,
    coarse: [Scaled; 4],
    values: [Scaled; 4],
    tolerance: f64,
) -> IntegralIdentity {
    let scale = if values[2].ln_abs() >= values[3].ln_abs() {
        values[2]
    } else {
        values[3]
    };
    let change = change_against(&coarse[0], &values[0], &scale)
        .max(change_against(&coarse[1], &values[1], &scale));
    let convergence = Convergence::new(spec, base, fine, change);
    let residual = change_against(&values[0], &values[1], &scale);
    IntegralIdentity {
        lhs: values[0],
        rhs: values[1],
        scale,
        residual,
        tolerance,
        convergence,
        passed: convergence.certified && residual < tolerance,
    }
}

/// `∫u L₀v = ∫∇uᵀA∇v` for real test functions.
pub fn check_green<const D: usize, E: Executor>(
    field: &CoefficientField<D>,
    u: &TestFunction<D>,
    v: &TestFunction<D>,
    spec: &QuadratureSpec,
    exec: &E,
) -> Result<IntegralIdentity> {
    if !u.is_real() || !v.is_real() {
        return Err(CoreError::InvalidParameter {
            name: "test function",
            reason: "must be real".into(),
        });
    }
    let (r0, r1) = (
        u.support().0.max(v.support().0),
        u.support().1.min(v.support().1),
    );
    let integrand = |p: &RayPoint<D>| {
        let x = &p.x;
        let (lu, uj) = u.scaled_jet(x)?;
        let (lv, vj) = v.scaled_jet(x)?;
        let point = field.point(x);
        let lhs = uj.re.value * l0(&point, &vj.re);
        let rhs = uj.re.grad.dot(&(point.a * vj.re.grad));
        Some((lu + lv, [lhs, rhs, lhs.abs(), rhs.abs()]))
    };
    let grid = |s: &QuadratureSpec| {
        // disjoint supports: a dummy grid on which the integrand vanishes
        let (a, b) = if r0 < r1 {
            (r0, r1)
        } else {
            (u.support().0, u.support().1)
        };
        peaked_grid(a, b, s, true, |_, r, o| {
            u.ln_profile_offset(r, o)
                + v.ln_profile_offset(r, o)
                + (D as f64 - 1.0) * (o / r).ln_1p()
        })
    };
    let base = grid(spec)?;
    let fine = grid(&spec.doubled())?;
    let coarse = integrate(&base, exec, integrand);
    let values = integrate(&fine, exec, integrand);
    Ok(identity_report(
        spec,
        &base,
        &fine,
        coarse,
        values,
        GREEN_TOLERANCE,
    ))
}

/// `∫h_wᵀ∇f L₀f = −½∫∇fᵀB∇f` for a real test function `f`, where
/// `h_w = wA∇w/(∇wᵀA∇w)` and `B` is the Rellich matrix of `w`.
pub fn check_rellich<const D: usize, E: Executor>(
    field: &CoefficientField<D>,
    weight: &WeightFunction<D>,
    f: &TestFunction<D>,
    spec: &QuadratureSpec,
    exec: &E,
) -> Result<IntegralIdentity> {
    if !f.is_real() {
        return Err(CoreError::InvalidParameter {
            name: "test function",
            reason: "must be real".into(),
        });
    }
    let failure = core::sync::atomic::AtomicBool::new(false);
    let integrand = |p: &RayPoint<D>| {
        let x = &p.x;
        let (lambda, fj) = f.scaled_jet(x)?;
        let point = field.point(x);
        let Ok(wobj) = weight
            .w_jet(x)
            .and_then(|g| GeometricObjects::new(&point, &g))
        else {
            failure.store(true, core::sync::atomic::Ordering::Relaxed);
            return None;
        };
        let b = wobj.rellich(&point.a);
        let lhs = wobj.h.dot(&fj.re.grad) * l0(&point, &fj.re);
        let rhs = -0.5 * fj.re.grad.dot(&(b * fj.re.grad));
        Some((2.0 * lambda, [lhs, rhs, lhs.abs(), rhs.abs()]))
    };
    let base = adapted_grid(weight, 0.0, f, spec)?;
    let fine = adapted_grid(weight, 0.0, f, &spec.doubled())?;
    let coarse = integrate(&base, exec, integrand);
    let values = integrate(&fine, exec, integrand);
    if failure.into_inner() {
        return Err(CoreError::DegeneratePoint { value: 0.0 });
    }
    Ok(identity_report(
        spec,
        &base,
        &fine,
        coarse,
        values,
        RELLICH_TOLERANCE,
    ))
}

/// How `∫F_w L₀(f²)` was evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum ConjugatedBoundPath {
    /// `F_w · L₀(f²)` from the analytic Hessian of `f²`.
    Direct,
    /// `∇(f²)ᵀA∇F_w` after integrating by parts, with `∇F_w` by Richardson
    /// extrapolated central differences.
    Green,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConjugatedBoundReport {
    pub alpha: f64,
    /// `∫w²/q (w^{−α}L₀u)²`.
    pub i1: Scaled,
    /// `4α∫∇fᵀM_w∇f`.
    pub t1: Scaled,
    /// `α∫F_w L₀(f²)` by the direct and by the Green path.
    pub t2_direct: Scaled,
    pub t2_green: Scaled,
    /// `4α²∫q/w² D_f²`.
    pub t3: Scaled,
    /// `(I₁ − (T₁ − T₂ + T₃)) / |I₁|` for each path.
    pub slack_direct: f64,
    pub slack_green: f64,
    pub tolerance: f64,
    pub convergence_direct: Convergence,
    pub convergence_green: Convergence,
    /// First path, direct preferred, that converged with admissible slack.
    pub certified_path: Option<ConjugatedBoundPath>,
    pub passed: bool,
}

/// `∇F_w(x)` by central differences at steps `h` and `h/2`, combined by one
/// Richardson step.
fn grad_f_w<const D: usize>(
    field: &CoefficientField<D>,
    weight: &WeightFunction<D>,
    x: &Vector<D>,
) -> Result<Vector<D>> {
    let f_at = |y: Vector<D>| -> Result<f64> {
        Ok(GeometricObjects::new(&field.point(&y), &weight.w_jet(&y)?)?.f)
    };
    let h = 1e-3 * x.norm();
    let mut grad = Vector::<D>::zeros();
    for k in 0..D {
        let e = Vector::<D>::from_fn(|i, _| if i == k { 1.0 } else { 0.0 });
        let central =
            |s: f64| -> Result<f64> { Ok((f_at(x + e * s)? - f_at(x - e * s)?) / (2.0 * s)) };
        let (g1, g2) = (central(h)?, central(0.5 * h)?);
        grad[k] = (4.0 * g2 - g1) / 3.0;
    }
    Ok(grad)
}

/// `I₁ ≥ 4α∫∇fᵀM_w∇f − α∫F_w L₀(f²) + 4α²∫q/w² D_f²` for real `u` and
/// `f = w^{−α}u`, without lower order terms.
pub fn check_conjugated_bound<const D: usize, E: Executor>(
    field: &CoefficientField<D>,
    weight: &WeightFunction<D>,
    u: &TestFunction<D>,
    alpha: f64,
    spec: &QuadratureSpec,
    exec: &E,
) -> Result<ConjugatedBoundReport> {
    if !u.is_real() {
        return Err(CoreError::InvalidParameter {
            name: "test function",
            reason: "must be real".into(),
        });
    }
    if field.b_sup() != 0.0 || field.c_sup() != 0.0 {
        return Err(CoreError::InvalidParameter {
            name: "field",
            reason: "lower order terms must vanish".into(),
        });
    }
    let failure = core::sync::atomic::AtomicBool::new(false);
    let integrand = |p: &RayPoint<D>| {
        let x = &p.x;
        let (_, uj) = u.scaled_jet(x)?;
        let point = field.point(x);
        let objects = weight
            .w_jet(x)
            .and_then(|g| GeometricObjects::new(&point, &g));
        let (Ok(wobj), Ok(grad_fw)) = (objects, grad_f_w(field, weight, x)) else {
            failure.store(true, core::sync::atomic::Ordering::Relaxed);
            return None;
        };
        let w = wobj.g.value;
        let pow = wobj
            .g
            .compose(1.0, -alpha / w, alpha * (alpha + 1.0) / (w * w));
        let f: Jet<D> = uj.re.mul(&pow);
        let f2 = f.mul(&f);
        let qw = wobj.q / (w * w);
        let l0u = l0(&point, &uj.re);
        let df = d_f_value(&point.a, &wobj, &f);
        let values = [
            l0u * l0u / qw,
            4.0 * alpha * f.grad.dot(&(wobj.m * f.grad)),
            alpha * wobj.f * l0(&point, &f2),
            4.0 * alpha * alpha * qw * df * df,
            alpha * f2.grad.dot(&(point.a * grad_fw)),
        ];
        Some((ln_factor(weight, u, alpha, p), values))
    };
    let exponent = 2.0 * alpha;
    let base = adapted_grid(weight, exponent, u, spec)?;
    let fine = adapted_grid(weight, exponent, u, &spec.doubled())?;
    let coarse = integrate_about(&base, exec, ray_base(weight, alpha), integrand);
    let v = integrate_about(&fine, exec, ray_base(weight, alpha), integrand);
    if failure.into_inner() {
        return Err(CoreError::DegeneratePoint { value: 0.0 });
    }
    let [i1, t1, t2_direct, t3, t2_green] = v;
    let scale = i1.scale_by(1.0);
    let changes: Vec<f64> = (0..5)
        .map(|k| change_against(&coarse[k], &v[k], &scale))
        .collect();
    let common = changes[0].max(changes[1]).max(changes[3]);
    let convergence_direct = Convergence::new(spec, &base, &fine, common.max(changes[2]));
    let convergence_green = Convergence::new(spec, &base, &fine, common.max(changes[4]));
    let slack = |t2: &Scaled| {
        let rhs = difference(&t1, t2).add(&t3);
        let s = difference(&i1, &rhs);
        if i1.is_zero() {
            if s.is_zero() {
                0.0
            } else {
                f64::NEG_INFINITY
            }
        } else {
            s.ratio(&i1)
        }
    };
    let slack_direct = slack(&t2_direct);
    let slack_green = slack(&t2_green);
    let ok = |c: &Convergence, s: f64| c.certified && s >= -CONJUGATED_BOUND_TOLERANCE;
    let certified_path = if ok(&convergence_direct, slack_direct) {
        Some(ConjugatedBoundPath::Direct)
    } else if ok(&convergence_green, slack_green) {
        Some(ConjugatedBoundPath::Green)
    } else {
        None
    };
    Ok(ConjugatedBoundReport {
        alpha,
        i1,
        t1,
        t2_direct,
        t2_green,
        t3,
        slack_direct,
        slack_green,
        tolerance: CONJUGATED_BOUND_TOLERANCE,
        convergence_direct,
        convergence_green,
        certified_path,
        passed: certified_path.is_some(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Sequential;
    use crate::jet::Matrix;
    use crate::params::{make_affine_field, make_constant_field, ProblemParams};
    use crate::quadrature::{make_bump, Modulation};

    fn spec() -> QuadratureSpec {
        QuadratureSpec {
            panel_order: 16,
            angular_order: 16,
        }
    }

    fn affine() -> CoefficientField<2> {
        let g = [
            Matrix::<2>::new(0.2, 0.05, 0.05, -0.1),
            Matrix::<2>::new(-0.1, 0.1, 0.1, 0.15),
        ];
        make_affine_field(Matrix::<2>::identity(), g, 1.0).unwrap()
    }

    #[test]
    fn geometric_alphas_span_the_range() {
        let a = geometric_alphas(2.0, 8.0, 4);
        assert_eq!(a.len(), 4);
        assert_eq!(a[0], 2.0);
        assert!((a[3] - 16.0).abs() < 1e-12);
        assert!((a[1] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn conjugation_identity_holds_for_real_and_complex_u() {
        let field = affine();
        let w = WeightFunction::new(&field, 1.0, 1.0).unwrap();
        let u = make_bump::<2>(
            0.2,
            0.8,
            Modulation::PlaneWave {
                wavevector: [4.0, -2.0],
            },
        )
        .unwrap();
        let pts = [
            Vector::<2>::new(0.3, 0.2),
            Vector::<2>::new(-0.5, 0.4),
            Vector::<2>::new(0.05, -0.7),
        ];
        for alpha in [0.0, 3.0, 250.0] {
            let r = check_conjugation_identity(&field, &w, &u, alpha, &pts, &Sequential).unwrap();
            assert_eq!(r.points, 3);
            assert!(r.passed, "{r:?}");
        }
        assert!(
            conjugation_residual(&field, &w, &u, 1.0, &Vector::<2>::new(0.1, 0.0))
                .unwrap()
                .is_none()
        );
    }

    #[test]
    fn green_identity_for_distinct_bumps() {
        let field = affine();
        let u = make_bump::<2>(0.2, 0.8, Modulation::None).unwrap();
        let v = make_bump::<2>(
            0.3,
            0.7,
            Modulation::Linear {
                offset: 1.0,
                slope: [0.5, -1.0],
            },
        )
        .unwrap();
        let r = check_green(&field, &u, &v, &spec(), &Sequential).unwrap();
        assert!(r.passed, "{r:?}");
        let zero = make_bump::<2>(
            0.3,
            0.7,
            Modulation::Linear {
                offset: 0.0,
                slope: [0.0, 0.0],
            },
        )
        .unwrap();
        let r = check_green(&field, &u, &zero, &spec(), &Sequential).unwrap();
        assert!(r.lhs.is_zero() && r.rhs.is_zero() && r.residual == 0.0);
    }

    #[test]
    fn rellich_identity_for_affine_field() {
        let field = affine();
        let w = WeightFunction::new(&field, 1.0, 1.0).unwrap();
        let f = make_bump::<2>(
            0.25,
            0.75,
            Modulation::Linear {
                offset: 1.0,
                slope: [1.0, 0.0],
            },
        )
        .unwrap();
        let r = check_rellich(&field, &w, &f, &spec(), &Sequential).unwrap();
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn conjugated_bound_holds_for_the_laplacian_at_moderate_alpha() {
        let field = make_constant_field(Matrix::<2>::identity(), 1.0).unwrap();
        let w = WeightFunction::new(&field, 1.0, 1.0).unwrap();
        let u = make_bump::<2>(0.3, 0.7, Modulation::None).unwrap();
        let r = check_conjugated_bound(&field, &w, &u, 10.0, &spec(), &Sequential).unwrap();
        assert!(r.passed, "{r:?}");
        assert_eq!(r.certified_path, Some(ConjugatedBoundPath::Direct));
        assert!(r.slack_green >= -CONJUGATED_BOUND_TOLERANCE, "{r:?}");
    }

    #[test]
    fn carleman_sides_for_the_laplacian() {
        let field = make_constant_field(Matrix::<2>::identity(), 1.0).unwrap();
        let constants = ConstantsReport::evaluate(&ProblemParams::laplacian(2, 1.0));
        let (_, alpha0) = constants.theorem_constants().unwrap();
        let u = make_bump::<2>(0.3, 0.7, Modulation::None).unwrap();
        let s = carleman_sides(&field, &constants, &u, alpha0, &spec(), &Sequential).unwrap();
        assert_eq!(s.passed, Some(true), "{s:?}");
        let below = carleman_sides(&field, &constants, &u, 10.0, &spec(), &Sequential).unwrap();
        assert_eq!(below.passed, None);
        let zero = make_bump::<2>(
            0.3,
            0.7,
            Modulation::Linear {
                offset: 0.0,
                slope: [0.0, 0.0],
            },
        )
        .unwrap();
        let z = carleman_sides(&field, &constants, &zero, alpha0, &spec(), &Sequential).unwrap();
        assert!(z.vacuous && z.passed == Some(true));
    }
}
