//! The anisotropic radius `σ`, the profile `φ`, and the Carleman weight
//! `w(x) = φ(σ(x)/ρ)` with its first two derivatives.

use crate::error::{CoreError, Result};
use crate::jet::{Jet, Matrix, Vector};
use crate::linalg;
use crate::params::CoefficientField;
use crate::sampling::PointSampler;
#[allow(unused_imports)] // inherent methods shadow it whenever std is linked
use num_traits::Float;

/// Absolute tolerance used by [`ein`].
pub const EIN_TOLERANCE: f64 = 1e-13;

const SERIES_LIMIT: f64 = 0.5;

// Gauss–Kronrod 15 point rule on [-1, 1]; index 7 is the centre.
const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const G7_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// `(1 − e^{−t}) / t`, extended by `1` at `t = 0`.
fn ein_integrand(t: f64) -> f64 {
    if t == 0.0 {
        1.0
    } else {
        -(-t).exp_m1() / t
    }
}

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = GK_WEIGHTS[7] * fc;
    let mut gauss = G7_WEIGHTS[3] * fc;
    for i in 0..7 {
        let s = f(c - h * GK_NODES[i]) + f(c + h * GK_NODES[i]);
        kronrod += GK_WEIGHTS[i] * s;
        if i % 2 == 1 {
            gauss += G7_WEIGHTS[i / 2] * s;
        }
    }
    (kronrod * h, (kronrod - gauss).abs() * h)
}

fn adaptive(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let (value, err) = gk15(f, a, b);
    if err <= tol || depth == 0 {
        return value;
    }
    let m = 0.5 * (a + b);
    adaptive(f, a, m, 0.5 * tol, depth - 1) + adaptive(f, m, b, 0.5 * tol, depth - 1)
}

fn ein_series(z: f64) -> f64 {
    let mut sum = 0.0;
    let mut power = 1.0;
    let mut factorial = 1.0;
    for k in 1..40 {
        power *= z;
        factorial *= k as f64;
        let term = power / (k as f64 * factorial);
        if k % 2 == 1 {
            sum += term;
        } else {
            sum -= term;
        }
        if term < 1e-17 {
            break;
        }
    }
    sum
}

/// `Ein(z) = ∫₀^z (1 − e^{−t})/t dt` for `z ≥ 0`.
pub fn ein(z: f64) -> f64 {
    ein_with_tolerance(z, EIN_TOLERANCE)
}

pub fn ein_with_tolerance(z: f64, tol: f64) -> f64 {
    if z <= SERIES_LIMIT {
        return ein_series(z);
    }
    ein_series(SERIES_LIMIT) + adaptive(&ein_integrand, SERIES_LIMIT, z, tol, 40)
}

/// `φ(r) = r exp(−∫₀^r (1 − e^{−μt})/t dt) = r e^{−Ein(μr)}`.
pub fn phi(r: f64, mu: f64) -> f64 {
    r * (-ein(mu * r)).exp()
}

/// `φ'(r) = e^{−Ein(μr) − μr}`; equals `1` at `r = 0`.
pub fn phi_prime(r: f64, mu: f64) -> f64 {
    (-ein(mu * r) - mu * r).exp()
}

/// `φ''(r) = φ'(r)(expm1(−μr)/r − μ)`.
pub fn phi_second(r: f64, mu: f64) -> f64 {
    let slope = if r == 0.0 {
        -mu
    } else {
        (-mu * r).exp_m1() / r
    };
    phi_prime(r, mu) * (slope - mu)
}

/// `(φ, φ', φ'')` at `r`, sharing one evaluation of `Ein`.
pub fn phi_derivatives(r: f64, mu: f64) -> (f64, f64, f64) {
    let e = ein(mu * r);
    let d1 = (-e - mu * r).exp();
    let slope = if r == 0.0 {
        -mu
    } else {
        (-mu * r).exp_m1() / r
    };
    (r * (-e).exp(), d1, d1 * (slope - mu))
}

/// `ψ(r) = φ(r)/(rφ'(r)) = e^{μr}`.
pub fn psi(r: f64, mu: f64) -> f64 {
    (mu * r).exp()
}

pub fn psi_prime(r: f64, mu: f64) -> f64 {
    mu * (mu * r).exp()
}

/// `μ₁ = e^{√ϑ₁μ}` if `√ϑ₁μ ≤ 1`, else `e√ϑ₁μ`.
pub fn mu1(theta1: f64, mu: f64) -> f64 {
    let t = theta1.sqrt() * mu;
    if t <= 1.0 {
        t.exp()
    } else {
        core::f64::consts::E * t
    }
}

/// 12-point Gauss–Legendre rule on `[0, 1]`.
const INCREMENT_NODES: [f64; 12] = [
    0.009219682876640378,
    0.0479413718147626,
    0.11504866290284765,
    0.20634102285669126,
    0.31608425050090994,
    0.43738329574426554,
    0.5626167042557344,
    0.6839157494990901,
    0.7936589771433087,
    0.8849513370971523,
    0.9520586281852375,
    0.9907803171233596,
];
const INCREMENT_WEIGHTS: [f64; 12] = [
    0.02358766819325601,
    0.05346966299765944,
    0.08003916427167306,
    0.10158371336153282,
    0.11674626826917732,
    0.12457352290670134,
    0.12457352290670134,
    0.11674626826917732,
    0.10158371336153282,
    0.08003916427167306,
    0.05346966299765944,
    0.02358766819325601,
];

/// The weight `w(x) = φ(σ(x)/ρ)` attached to `A0 = A(0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightFunction<const D: usize> {
    a0_inv: Matrix<D>,
    rho: f64,
    mu: f64,
}

impl<const D: usize> WeightFunction<D> {
    pub fn new(field: &CoefficientField<D>, rho: f64, mu: f64) -> Result<Self> {
        Self::from_a0(field.a0(), rho, mu)
    }

    pub fn from_a0(a0: &Matrix<D>, rho: f64, mu: f64) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(CoreError::InvalidParameter {
                name: "rho",
                reason: "must be positive".into(),
            });
        }
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(CoreError::InvalidParameter {
                name: "mu",
                reason: "must be positive".into(),
            });
        }
        Ok(WeightFunction {
            a0_inv: linalg::spd_inverse(a0)?,
            rho,
            mu,
        })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn a0_inv(&self) -> &Matrix<D> {
        &self.a0_inv
    }

    /// `σ(x) = (xᵀA0⁻¹x)^{1/2}`.
    pub fn sigma(&self, x: &Vector<D>) -> f64 {
        x.dot(&(self.a0_inv * x)).max(0.0).sqrt()
    }

    /// `σ` with `∇σ = A0⁻¹x/σ` and `Hσ = (A0⁻¹ − ∇σ∇σᵀ)/σ`.
    pub fn sigma_jet(&self, x: &Vector<D>) -> Result<Jet<D>> {
        let s = self.sigma(x);
        if s <= 0.0 {
            return Err(CoreError::DegeneratePoint { value: s });
        }
        let grad = self.a0_inv * x / s;
        Ok(Jet {
            value: s,
            grad,
            hess: (self.a0_inv - grad * grad.transpose()) / s,
        })
    }

    /// `ln w(x) = ln(σ/ρ) − Ein(μσ/ρ)`, finite wherever `x ≠ 0`.
    pub fn ln_w(&self, x: &Vector<D>) -> f64 {
        let s = self.sigma(x) / self.rho;
        s.ln() - ein(self.mu * s)
    }

    /// `σ(θ)` for a unit direction `θ`. For an isotropic weight this is the
    /// exact constant, independent of how `θ` was rounded; with `α ln w`
    /// reaching `10¹⁵` an ulp of `σ` would otherwise be visible.
    pub fn ray_sigma(&self, direction: &Vector<D>) -> f64 {
        if self.is_isotropic() {
            self.a0_inv[(0, 0)].sqrt()
        } else {
            self.sigma(direction) / direction.norm()
        }
    }

    /// `ln w(rθ)` with `σ(rθ) = r σ(θ)`.
    pub fn ln_w_ray(&self, direction: &Vector<D>, r: f64) -> f64 {
        let s = r * self.ray_sigma(direction) / self.rho;
        s.ln() - ein(self.mu * s)
    }

    /// `ln w((r + δ)θ) − ln w(rθ)` for a unit direction `θ`, with relative
    /// accuracy in `δ`. Integrands with `α` far beyond `10⁸` need this: the
    /// absolute rounding of `α ln w` alone would exceed one unit.
    pub fn ln_w_increment(&self, direction: &Vector<D>, r: f64, delta: f64) -> f64 {
        let kappa = self.mu * self.ray_sigma(direction) / self.rho;
        let (a, span) = (kappa * r, kappa * delta);
        let ein_diff = if span.abs() <= 8.0 {
            // ∫ (1 − e^{−t})/t over [a, a + span], 12-point Gauss–Legendre
            let g = |t: f64| if t == 0.0 { 1.0 } else { -(-t).exp_m1() / t };
            span * INCREMENT_NODES
                .iter()
                .zip(&INCREMENT_WEIGHTS)
                .map(|(x, w)| w * g(a + x * span))
                .sum::<f64>()
        } else {
            ein(a + span) - ein(a)
        };
        (delta / r).ln_1p() - ein_diff
    }

    /// `A0` is a multiple of the identity, so `w` is radial.
    pub fn is_isotropic(&self) -> bool {
        let c = self.a0_inv[(0, 0)];
        (0..D).all(|i| (0..D).all(|j| self.a0_inv[(i, j)] == if i == j { c } else { 0.0 }))
    }

    pub fn w(&self, x: &Vector<D>) -> f64 {
        phi(self.sigma(x) / self.rho, self.mu)
    }

    pub fn w_jet(&self, x: &Vector<D>) -> Result<Jet<D>> {
        let sj = self.sigma_jet(x)?;
        let (f, f1, f2) = phi_derivatives(sj.value / self.rho, self.mu);
        Ok(sj.compose(f, f1 / self.rho, f2 / (self.rho * self.rho)))
    }

    /// Jet of `x ↦ ψ(σ(x)/ρ)`.
    pub fn psi_jet(&self, x: &Vector<D>) -> Result<Jet<D>> {
        let sj = self.sigma_jet(x)?;
        let k = self.mu / self.rho;
        let e = (k * sj.value).exp();
        Ok(sj.compose(e, k * e, k * k * e))
    }
}

/// Outcome of sampling the sandwich chain
/// `ϑ₁^{-1/2}|x|/(ρμ₁) ≤ σ/(ρμ₁) ≤ w ≤ σ/ρ ≤ ϑ₁^{1/2}|x|/ρ` on `B_ρ`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SandwichReport {
    pub theta1: f64,
    pub mu: f64,
    pub mu1: f64,
    pub samples: usize,
    pub violations: usize,
    /// Smallest `w − σ/(ρμ₁)` relative to `w`.
    pub worst_lower_margin: f64,
    /// Smallest `σ/ρ − w` relative to `w`.
    pub worst_upper_margin: f64,
    pub passed: bool,
}

/// Relative allowance for comparisons that are equalities in exact
/// arithmetic (e.g. `σ = |x|` for `A0 = I`).
const ROUNDOFF: f64 = 4.0 * f64::EPSILON;

fn leq(a: f64, b: f64) -> bool {
    a <= b + ROUNDOFF * b.abs().max(a.abs())
}

/// Samples the sandwich chain; `mu1_override` replaces `μ₁` in the lower
/// bounds.
pub fn check_sandwich<const D: usize>(
    weight: &WeightFunction<D>,
    theta1: f64,
    n_samples: usize,
    sampler: &mut PointSampler,
    mu1_override: Option<f64>,
) -> SandwichReport {
    let m1 = mu1_override.unwrap_or_else(|| mu1(theta1, weight.mu));
    let rho = weight.rho;
    let st = theta1.sqrt();
    let mut violations = 0;
    let mut worst_lower = f64::INFINITY;
    let mut worst_upper = f64::INFINITY;
    for _ in 0..n_samples {
        let x = sampler.ball::<D>(rho);
        let n = x.norm();
        if n == 0.0 {
            continue;
        }
        let s = weight.sigma(&x);
        let w = weight.w(&x);
        let chain = [
            n / (st * rho * m1),
            s / (rho * m1),
            w,
            s / rho,
            st * n / rho,
        ];
        if !chain.windows(2).all(|p| leq(p[0], p[1])) {
            violations += 1;
        }
        worst_lower = worst_lower.min((w - chain[1]) / w);
        worst_upper = worst_upper.min((chain[3] - w) / w);
    }
    SandwichReport {
        theta1,
        mu: weight.mu,
        mu1: m1,
        samples: n_samples,
        violations,
        worst_lower_margin: worst_lower,
        worst_upper_margin: worst_upper,
        passed: violations == 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent oracle: composite Simpson on `(1 − e^{−t})/t` with many
    /// panels.
    fn ein_simpson(z: f64) -> f64 {
        let n = 200_000;
        let h = z / n as f64;
        let mut s = ein_integrand(0.0) + ein_integrand(z);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * ein_integrand(i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn ein_matches_simpson_oracle() {
        for z in [0.1, 0.5, 0.7, 1.0, 2.0, 5.0, 12.0] {
            let a = ein(z);
            let b = ein_simpson(z);
            assert!((a - b).abs() < 1e-12, "z={z}: {a} vs {b}");
        }
    }

    #[test]
    fn ein_is_continuous_at_series_switch() {
        let below = ein(SERIES_LIMIT);
        let above = ein(SERIES_LIMIT * (1.0 + 1e-12));
        assert!((below - above).abs() < 1e-12);
    }

    #[test]
    fn phi_reference_value() {
        assert!((phi(1.0, 1.0) - 0.4509).abs() < 1e-4);
        // frozen from the Simpson oracle
        assert!((phi(1.0, 1.0) - (-ein_simpson(1.0)).exp()).abs() < 1e-13);
        assert_eq!(phi(0.0, 3.0), 0.0);
    }

    #[test]
    fn phi_prime_matches_finite_difference() {
        for r in [0.01, 0.3, 1.0, 2.5] {
            let h = 1e-5;
            let fd = (phi(r + h, 1.0) - phi(r - h, 1.0)) / (2.0 * h);
            assert!(((phi_prime(r, 1.0) - fd) / fd).abs() < 1e-6);
            let fd2 = (phi_prime(r + h, 1.0) - phi_prime(r - h, 1.0)) / (2.0 * h);
            assert!(((phi_second(r, 1.0) - fd2) / fd2).abs() < 1e-6);
        }
        assert!((phi_prime(1e-8, 1.0) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn mu1_branches() {
        let e = core::f64::consts::E;
        assert!((mu1(1.0, 1.0) - e).abs() < 1e-15);
        assert!((mu1(4.0, 1.0) - 2.0 * e).abs() < 1e-15);
        assert!((mu1(1.0, 0.1) - 1.105_170_918_075_647_7).abs() < 1e-12);
    }

    #[test]
    fn sigma_examples() {
        let w = WeightFunction::from_a0(&Matrix::<3>::identity(), 1.0, 1.0).unwrap();
        assert_eq!(w.sigma(&Vector::<3>::new(3.0, 4.0, 0.0)), 5.0);
        let w = WeightFunction::from_a0(&Matrix::<2>::new(4.0, 0.0, 0.0, 1.0), 1.0, 1.0).unwrap();
        assert_eq!(w.sigma(&Vector::<2>::new(2.0, 0.0)), 1.0);
        assert_eq!(w.w(&Vector::<2>::zeros()), 0.0);
        assert!(w.sigma_jet(&Vector::<2>::zeros()).is_err());
    }

    #[test]
    fn ln_w_increment_matches_differences_and_stays_accurate_for_tiny_steps() {
        let a0 = Matrix::<2>::new(1.4, 0.3, 0.3, 0.8);
        let w = WeightFunction::from_a0(&a0, 1.7, 0.8).unwrap();
        let dir = Vector::<2>::new(0.6, -0.8);
        for (r, d) in [(0.3, 0.25), (0.5, -0.2), (0.2, 1.0)] {
            let direct = w.ln_w(&(dir * (r + d))) - w.ln_w(&(dir * r));
            assert!(
                (w.ln_w_increment(&dir, r, d) - direct).abs() < 1e-14,
                "{r} {d}"
            );
        }
        // first order: δ (ln w)'(r) with (ln w)' = φ'/φ · σ(θ)/ρ
        let (r, d) = (0.4, 1e-12);
        let s = w.sigma(&dir) / 1.7;
        let slope = phi_prime(r * s, 0.8) / phi(r * s, 0.8) * s;
        let inc = w.ln_w_increment(&dir, r, d);
        assert!((inc / (slope * d) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn w_jet_matches_finite_differences() {
        let a0 = Matrix::<2>::new(1.4, 0.3, 0.3, 0.8);
        let w = WeightFunction::from_a0(&a0, 1.7, 0.8).unwrap();
        let x = Vector::<2>::new(0.4, -0.7);
        let j = w.w_jet(&x).unwrap();
        let h = 1e-5;
        for k in 0..2 {
            let e = Vector::<2>::from_fn(|i, _| if i == k { h } else { 0.0 });
            let fd = (w.w(&(x + e)) - w.w(&(x - e))) / (2.0 * h);
            assert!(((j.grad[k] - fd) / fd).abs() < 1e-6);
            let gp = w.w_jet(&(x + e)).unwrap().grad;
            let gm = w.w_jet(&(x - e)).unwrap().grad;
            let col = (gp - gm) / (2.0 * h);
            assert!((j.hess.column(k) - col).norm() < 1e-6 * j.hess.norm());
        }
    }

    #[test]
    fn sandwich_examples() {
        let w = WeightFunction::from_a0(&Matrix::<2>::identity(), 1.0, 1.0).unwrap();
        let mut s = PointSampler::new(1, 2);
        assert!(check_sandwich(&w, 1.0, 10_000, &mut s, None).passed);
        let halved = check_sandwich(&w, 1.0, 10_000, &mut s, Some(mu1(1.0, 1.0) / 2.0));
        assert!(!halved.passed);

        let a0 = Matrix::<2>::new(4.0, 0.0, 0.0, 0.25);
        let w = WeightFunction::from_a0(&a0, 2.0, 0.3).unwrap();
        assert!(check_sandwich(&w, 4.0, 10_000, &mut s, None).passed);
    }
}
