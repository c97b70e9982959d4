//! Closed-form constants of the estimate.
//!
//! Every formula is written once, generically over [`Num`], and evaluated
//! either in plain `f64` or in outward rounded [`Interval`] arithmetic for
//! audits against published bounds.

use crate::error::{CoreError, Result};
use crate::interval::{Interval, Num};
use crate::params::ProblemParams;

fn pow<T: Num>(x: T, n: u32) -> T {
    (0..n).fold(T::of(1.0), |acc, _| acc * x)
}

/// `x^{k/2}` for odd or even `k`.
fn half_pow<T: Num>(x: T, k: u32) -> T {
    let base = pow(x, k / 2);
    if k % 2 == 1 {
        base * x.sqrt()
    } else {
        base
    }
}

fn euler<T: Num>() -> T {
    T::of(1.0).exp()
}

/// `μ₁` with the branch chosen on the midpoint of `√ϑ₁μ`.
pub fn mu1_generic<T: Num>(theta1: T, mu: T) -> T {
    let t = theta1.sqrt() * mu;
    if t.mid() <= 1.0 {
        t.exp()
    } else {
        euler::<T>() * t
    }
}

/// The four constants of the pointwise bounds plus `C_μ = μ − 3C_M`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PointwiseConstants<T = f64> {
    pub c_f_prime: T,
    pub c_f: T,
    pub c_m: T,
    pub c_psi: T,
    pub c_mu: T,
}

pub fn pointwise_generic<T: Num>(d: usize, theta1: T, theta2: T, mu: T) -> PointwiseConstants<T> {
    let dd = T::of(d as f64);
    let st = theta1.sqrt();
    let e = (mu * st).exp();
    let c_f_prime = T::of(3.0) * dd * half_pow(theta1, 7) * theta2;
    let inner = st * (c_f_prime + mu);
    let c_f = e * (inner + T::of((d as f64 - 2.0).abs()));
    let c_m = T::of(11.0) * dd * half_pow(theta1, 11) * theta2;
    let c_psi = mu * e * pow(theta1, 2) * (inner + dd - T::of(1.0));
    PointwiseConstants {
        c_f_prime,
        c_f,
        c_m,
        c_psi,
        c_mu: mu - T::of(3.0) * c_m,
    }
}

pub fn pointwise_constants(d: usize, theta1: f64, theta2: f64, mu: f64) -> PointwiseConstants {
    pointwise_generic(d, theta1, theta2, mu)
}

/// The constant chain of the `ρ = 1` estimate for one `(d, ϑ₁, ϑ₂, μ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Chain<T = f64> {
    pub pointwise: PointwiseConstants<T>,
    pub mu1: T,
    pub k: T,
    /// Closed-form upper estimate of `K`.
    pub k_estimate: T,
    pub t1: T,
    pub alpha1: T,
    pub p: T,
    pub q: T,
    pub r: T,
    pub alpha2: T,
    pub k1: T,
    pub k5: T,
    /// `ĈC = K₁/K₅`.
    pub hat_c: T,
    /// `max{α₁, α₂}`.
    pub hat_alpha0: T,
    /// `e^{−2μ√ϑ₁}/(ϑ₁μ₁)²`, the factor shared by `p`, `K₃` and `K₅`.
    pub lower_q: T,
    pub theta1: T,
}

impl<T: Num> Chain<T> {
    pub fn compute(d: usize, theta1: T, theta2: T, mu: T) -> Self {
        let pointwise = pointwise_generic(d, theta1, theta2, mu);
        let dd = T::of(d as f64);
        let st = theta1.sqrt();
        let e = (mu * st).exp();
        let m1 = mu1_generic(theta1, mu);
        let th2 = theta1 * theta1;
        let k = (dd * pointwise.c_psi).max(T::of(6.0) * mu * m1 * e * th2);
        let k_estimate =
            T::of(6.0) * dd * mu * m1 * e * th2 * (st * (pointwise.c_f_prime + mu) + dd);
        let e2m2 = e * e * m1 * m1;
        let t1 = k * half_pow(theta1, 5) * e2m2 / T::of(8.0);
        let alpha1 = k * half_pow(theta1, 9) * e2m2;
        let lower_q = T::of(1.0) / (e2m2 * th2);
        let p = pointwise.c_mu * lower_q;
        let q = pointwise.c_mu * pointwise.c_f * lower_q + k * (t1 + st / T::of(2.0));
        let r = k * (T::of(1.0) + pointwise.c_f * pointwise.c_f * th2 / T::of(2.0));
        let qp = q / p;
        let alpha2 = qp + (qp * qp + T::of(2.0) * r / p).sqrt();
        let k1 = k / T::of(2.0) + th2 * e2m2;
        let k5 = p / T::of(2.0);
        Chain {
            pointwise,
            mu1: m1,
            k,
            k_estimate,
            t1,
            alpha1,
            p,
            q,
            r,
            alpha2,
            k1,
            k5,
            hat_c: k1 / k5,
            hat_alpha0: alpha1.max(alpha2),
            lower_q,
            theta1,
        }
    }

    /// `K₂(α) = pα³ − qα² − rα` at `t = t₁`.
    pub fn k2(&self, alpha: T) -> T {
        self.p * alpha * alpha * alpha - self.q * alpha * alpha - self.r * alpha
    }

    /// `K₃(α)` at `t = t₁`.
    pub fn k3(&self, alpha: T) -> T {
        T::of(2.0) * self.lower_q * alpha * alpha
            - T::of(2.0) * self.k * half_pow(self.theta1, 5) * alpha
    }

    /// `K₄(α) = C_μ α`.
    pub fn k4(&self, alpha: T) -> T {
        self.pointwise.c_mu * alpha
    }
}

/// The closed-form upper bounds for `C̃` and `α̃₀` with
/// `C_μ' = μ − 33dϑ₁^{11/2}ϑ₂ρ`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClosedFormBounds<T = f64> {
    pub c_mu: T,
    pub tilde_c_upper: T,
    pub tilde_alpha0_upper: T,
}

pub fn closed_form_generic<T: Num>(
    d: usize,
    rho: T,
    theta1: T,
    theta2: T,
    mu: T,
) -> ClosedFormBounds<T> {
    let dd = T::of(d as f64);
    let e = (mu * theta1.sqrt()).exp();
    let m1 = mu1_generic(theta1, mu);
    let rt2 = rho * theta2;
    let c_mu = mu - T::of(33.0) * dd * half_pow(theta1, 11) * rt2;
    let one = T::of(1.0);
    let tilde_c_upper = T::of(2.0)
        * dd
        * dd
        * pow(theta1, 8)
        * pow(e, 4)
        * pow(m1, 4)
        * (T::of(3.0) * mu * mu + (T::of(9.0) * rt2 + T::of(3.0)) * mu + one)
        / c_mu;
    let s = T::of(3.0) * rt2 + mu + one;
    let tilde_alpha0_upper = T::of(11.0)
        * pow(dd, 4)
        * half_pow(theta1, 33)
        * pow(e, 6)
        * pow(m1, 6)
        * s
        * s
        * (one + mu * (mu + one) / c_mu);
    ClosedFormBounds {
        c_mu,
        tilde_c_upper,
        tilde_alpha0_upper,
    }
}

pub fn closed_form_upper_bounds(params: &ProblemParams) -> Result<ClosedFormBounds> {
    let b = closed_form_generic(
        params.d,
        params.rho,
        params.theta1,
        params.theta2,
        params.mu,
    );
    if b.c_mu <= 0.0 {
        return Err(CoreError::InadmissibleMu { margin: b.c_mu });
    }
    Ok(b)
}

/// `ε₁ = 1 − 33d(√d + 2)ϑ₁^{11/2}(eϑ₁^{3/2} + 1)ϑ₂`.
pub fn epsilon1_generic<T: Num>(d: usize, theta1: T, theta2: T) -> T {
    let dd = T::of(d as f64);
    T::of(1.0)
        - T::of(33.0)
            * dd
            * (dd.sqrt() + T::of(2.0))
            * half_pow(theta1, 11)
            * (euler::<T>() * half_pow(theta1, 3) + T::of(1.0))
            * theta2
}

pub fn epsilon1(d: usize, theta1: f64, theta2: f64) -> f64 {
    epsilon1_generic(d, theta1, theta2)
}

/// Final constants of the estimate on `B_ρ`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FinalConstants<T = f64> {
    /// `C̃ = ĈC(d, ϑ₁, ρϑ₂, μ)`.
    pub tilde_c: T,
    /// `α̃₀ = α̂₀(d, ϑ₁, ρϑ₂, μ)`.
    pub tilde_alpha0: T,
    /// `C = 6C̃`.
    pub c_final: T,
    /// `max{α̃₀, Cρ²‖b‖²ϑ₁^{3/2}, C^{1/3}ρ^{4/3}‖c‖^{2/3}√ϑ₁}`.
    pub alpha0_final: T,
}

fn final_generic<T: Num>(params: &ProblemParams, tilde: &Chain<T>) -> FinalConstants<T> {
    let theta1 = T::of(params.theta1);
    let rho = T::of(params.rho);
    let c = T::of(6.0) * tilde.hat_c;
    let mut alpha0 = tilde.hat_alpha0;
    if params.b_inf > 0.0 {
        let b = T::of(params.b_inf);
        alpha0 = alpha0.max(c * rho * rho * b * b * half_pow(theta1, 3));
    }
    if params.c_inf > 0.0 {
        let cc = T::of(params.c_inf);
        let cube_root = |x: T| (x.ln() / T::of(3.0)).exp();
        let term = cube_root(c * pow(rho, 4) * cc * cc) * theta1.sqrt();
        alpha0 = alpha0.max(term);
    }
    FinalConstants {
        tilde_c: tilde.hat_c,
        tilde_alpha0: tilde.hat_alpha0,
        c_final: c,
        alpha0_final: alpha0,
    }
}

/// Everything derived from one parameter set.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConstantsReport {
    pub params: ProblemParams,
    /// `33dϑ₁^{11/2}ϑ₂ρ`.
    pub mu_threshold: f64,
    pub admissibility_margin: f64,
    pub admissible: bool,
    /// Pointwise constants at the working scale `(d, ϑ₁, ρϑ₂, μ)`.
    pub pointwise: PointwiseConstants,
    pub mu1: f64,
    /// Chain at `(d, ϑ₁, ϑ₂, μ)`, absent when `μ ≤ 33dϑ₁^{11/2}ϑ₂`.
    pub hat: Option<Chain>,
    /// Chain at `(d, ϑ₁, ρϑ₂, μ)`, absent when inadmissible.
    pub tilde: Option<Chain>,
    pub finals: Option<FinalConstants>,
    pub closed_form: Option<ClosedFormBounds>,
    pub epsilon1: f64,
    /// Set when some chain has `α₁ > α₂`.
    pub alpha1_exceeds_alpha2: bool,
    /// Set when the closed-form estimate of `K` fails to dominate `K`.
    pub k_estimate_violated: bool,
}

impl ConstantsReport {
    pub fn evaluate(params: &ProblemParams) -> Self {
        let scaled_theta2 = params.rho * params.theta2;
        let pointwise = pointwise_constants(params.d, params.theta1, scaled_theta2, params.mu);
        let admissible = pointwise.c_mu > 0.0;
        let chain_if = |theta2: f64| {
            let c = Chain::compute(params.d, params.theta1, theta2, params.mu);
            (c.pointwise.c_mu > 0.0).then_some(c)
        };
        let hat = chain_if(params.theta2);
        let tilde = chain_if(scaled_theta2);
        let chains = [hat, tilde];
        let alpha1_exceeds_alpha2 = chains.iter().flatten().any(|c| c.alpha1 > c.alpha2);
        let k_estimate_violated = chains.iter().flatten().any(|c| c.k_estimate < c.k);
        let closed_form = closed_form_upper_bounds(params).ok();
        ConstantsReport {
            params: *params,
            mu_threshold: params.mu_threshold(),
            admissibility_margin: params.admissibility_margin(),
            admissible,
            pointwise,
            mu1: crate::weight::mu1(params.theta1, params.mu),
            hat,
            tilde,
            finals: tilde.as_ref().map(|t| final_generic(params, t)),
            closed_form,
            epsilon1: epsilon1(params.d, params.theta1, params.theta2),
            alpha1_exceeds_alpha2,
            k_estimate_violated,
        }
    }

    /// `(C, α₀)` of the theorem, absent when inadmissible.
    pub fn theorem_constants(&self) -> Option<(f64, f64)> {
        self.finals.map(|f| (f.c_final, f.alpha0_final))
    }
}

/// Full report, or an inadmissibility error carrying the margin.
pub fn carleman_constants(params: &ProblemParams) -> Result<ConstantsReport> {
    let report = ConstantsReport::evaluate(params);
    if !report.admissible {
        return Err(CoreError::InadmissibleMu {
            margin: report.pointwise.c_mu,
        });
    }
    Ok(report)
}

/// Outward rounded enclosures of the constants that are compared against
/// published bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantsAudit {
    pub hat: Chain<Interval>,
    pub tilde: Chain<Interval>,
    pub finals: FinalConstants<Interval>,
    pub closed_form: ClosedFormBounds<Interval>,
    pub epsilon1: Interval,
}

pub fn audit(params: &ProblemParams) -> Result<ConstantsAudit> {
    let p = |x: f64| Interval::point(x);
    let d = params.d;
    let hat = Chain::compute(d, p(params.theta1), p(params.theta2), p(params.mu));
    let tilde = Chain::compute(
        d,
        p(params.theta1),
        p(params.rho) * p(params.theta2),
        p(params.mu),
    );
    if tilde.pointwise.c_mu.lo <= 0.0 {
        return Err(CoreError::InadmissibleMu {
            margin: tilde.pointwise.c_mu.mid(),
        });
    }
    Ok(ConstantsAudit {
        hat,
        tilde,
        finals: final_generic(params, &tilde),
        closed_form: closed_form_generic(
            d,
            p(params.rho),
            p(params.theta1),
            p(params.theta2),
            p(params.mu),
        ),
        epsilon1: epsilon1_generic(d, p(params.theta1), p(params.theta2)),
    })
}

/// Published Laplacian bounds `(8e⁸d², 18e¹²d⁴)` as enclosures.
pub fn laplacian_bounds(d: usize) -> (Interval, Interval) {
    let dd = Interval::point(d as f64);
    let e = Interval::point(1.0).exp();
    (
        Interval::point(8.0) * pow(e, 8) * dd * dd,
        Interval::point(18.0) * pow(e, 12) * pow(dd, 4),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    const E: f64 = core::f64::consts::E;

    #[test]
    fn pointwise_constants_laplacian_d3() {
        let c = pointwise_constants(3, 1.0, 0.0, 1.0);
        assert_eq!(c.c_f_prime, 0.0);
        assert_eq!(c.c_m, 0.0);
        assert!((c.c_f - 2.0 * E).abs() < 1e-14);
        // (√ϑ₁(C'_F + μ) + d − 1) = 3 for d = 3
        assert!((c.c_psi - 3.0 * E).abs() < 1e-14);
        assert_eq!(c.c_mu, 1.0);
    }

    #[test]
    fn pointwise_constants_d2_drop_terms() {
        let c = pointwise_constants(2, 2.5, 0.0, 0.7);
        let expected = (0.7 * 2.5f64.sqrt()).exp() * 2.5f64.sqrt() * 0.7;
        assert!((c.c_f - expected).abs() < 1e-14 * expected);
    }

    #[test]
    fn laplacian_d2_closed_forms() {
        let c = Chain::compute(2, 1.0, 0.0, 1.0);
        assert!((c.alpha1 - 6.0 * E.powi(6)).abs() < 1e-9 * c.alpha1);
        let hat_c = 6.0 * E.powi(6) + 2.0 * E.powi(8);
        assert!((c.hat_c - hat_c).abs() < 1e-10 * hat_c);
    }

    #[test]
    fn closed_form_plug_in() {
        let p = ProblemParams::laplacian(2, 1.0);
        let r = closed_form_upper_bounds(&p).unwrap();
        assert!((r.tilde_c_upper - 56.0 * E.powi(8)).abs() < 1e-10 * r.tilde_c_upper);
    }

    #[test]
    fn epsilon1_examples() {
        assert_eq!(epsilon1(2, 1.7, 0.0), 1.0);
        let critical = 1.0 / (99.0 * (E + 1.0));
        assert!(epsilon1(1, 1.0, critical * 0.999) > 0.0);
        assert!(epsilon1(1, 1.0, critical * 1.001) < 0.0);
    }

    #[test]
    fn inadmissible_reports_margin() {
        let p = ProblemParams::new(2, 1.0, 1.0, 0.1, 1.0, 0.0, 0.0).unwrap();
        match carleman_constants(&p) {
            Err(CoreError::InadmissibleMu { margin }) => {
                assert!((margin - (1.0 - 6.6)).abs() < 1e-12)
            }
            other => panic!("{other:?}"),
        }
        let r = ConstantsReport::evaluate(&p);
        assert!(r.tilde.is_none() && r.finals.is_none());
    }

    #[test]
    fn audit_encloses_f64_values() {
        let p = ProblemParams::new(3, 1.0, 1.3, 1e-4, 0.8, 0.5, 2.0).unwrap();
        let a = audit(&p).unwrap();
        let r = carleman_constants(&p).unwrap();
        let t = r.tilde.unwrap();
        assert!(a.tilde.hat_c.contains(t.hat_c));
        assert!(a.tilde.alpha2.contains(t.alpha2));
        assert!(a
            .finals
            .alpha0_final
            .contains(r.finals.unwrap().alpha0_final));
    }
}
