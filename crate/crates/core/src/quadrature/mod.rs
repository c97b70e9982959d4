//! Product quadrature on annuli `r0 < |x| < r1` in dimensions 1 to 3.
//!
//! A grid is an angular rule times, per direction, a composite
//! Gauss–Legendre rule in the radius whose weights include the Jacobian
//! `r^{d−1}`. Integrals are evaluated per direction in log-normalized form and
//! then combined in direction order, so the result does not depend on how
//! directions are distributed over workers.

pub mod bump;
pub mod rules;

pub use bump::{make_bump, Modulation, TestFunction};
pub use rules::{gauss_legendre, AngularRule};

use crate::error::{CoreError, Result};
use crate::exec::Executor;
use crate::jet::Vector;
use crate::summation::{scaled_sum, scaled_sums_about, Scaled};
use crate::weight::WeightFunction;
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent methods shadow it whenever std is linked
use num_traits::Float;

/// Orders of a grid: Gauss–Legendre nodes per radial panel and the angular
/// order passed to [`AngularRule::new`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct QuadratureSpec {
    pub panel_order: usize,
    pub angular_order: usize,
}

impl QuadratureSpec {
    pub fn doubled(&self) -> Self {
        QuadratureSpec {
            panel_order: 2 * self.panel_order,
            angular_order: 2 * self.angular_order,
        }
    }
}

/// Radial nodes `reference + offsets[i]` and weights, the latter including
/// `r^{d−1}`. Offsets are kept separately so integrands can evaluate steep
/// log factors relative to the reference radius.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RadialRule {
    pub reference: f64,
    pub offsets: Vec<f64>,
    pub weights: Vec<f64>,
}

impl RadialRule {
    fn with_jacobian(reference: f64, offsets: Vec<f64>, weights: Vec<f64>, d: usize) -> Self {
        let weights = offsets
            .iter()
            .zip(weights)
            .map(|(o, w)| w * (reference + o).powi(d as i32 - 1))
            .collect();
        RadialRule {
            reference,
            offsets,
            weights,
        }
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    pub fn radii(&self) -> impl Iterator<Item = f64> + '_ {
        self.offsets.iter().map(|o| self.reference + o)
    }
}

/// A quadrature node on the ray `rθ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayPoint<const D: usize> {
    pub x: Vector<D>,
    /// Unit direction `θ`.
    pub direction: Vector<D>,
    /// Reference radius of the ray's rule.
    pub reference: f64,
    /// `|x| − reference`, accurate relative to itself.
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid<const D: usize> {
    angular: AngularRule<D>,
    /// One shared rule, or one per direction.
    radial: Vec<RadialRule>,
    r0: f64,
    r1: f64,
}

impl<const D: usize> QuadratureGrid<D> {
    pub fn support(&self) -> (f64, f64) {
        (self.r0, self.r1)
    }

    pub fn angular(&self) -> &AngularRule<D> {
        &self.angular
    }

    pub fn radial(&self, direction: usize) -> &RadialRule {
        if self.radial.len() == 1 {
            &self.radial[0]
        } else {
            &self.radial[direction]
        }
    }

    pub fn node_count(&self) -> usize {
        (0..self.angular.len()).map(|j| self.radial(j).len()).sum()
    }

    /// All `(x, weight)` pairs, direction-major.
    pub fn nodes(&self) -> impl Iterator<Item = (Vector<D>, f64)> + '_ {
        (0..self.angular.len()).flat_map(move |j| {
            let dir = self.angular.directions[j];
            let aw = self.angular.weights[j];
            let rule = self.radial(j);
            rule.radii()
                .zip(&rule.weights)
                .map(move |(r, w)| (dir * r, aw * w))
        })
    }
}

fn check_radii(r0: f64, r1: f64) -> Result<()> {
    if r0 > 0.0 && r0 < r1 && r1.is_finite() {
        Ok(())
    } else {
        Err(CoreError::InvalidRadii { r0, r1 })
    }
}

fn check_orders<const D: usize>(radial: usize, angular: usize) -> Result<()> {
    if radial < 4 || (D > 1 && angular < 4) {
        return Err(CoreError::InvalidParameter {
            name: "order",
            reason: "orders must be at least 4".into(),
        });
    }
    Ok(())
}

/// Single-panel product rule with `n_radial` Gauss–Legendre nodes.
pub fn annulus_grid<const D: usize>(
    r0: f64,
    r1: f64,
    n_radial: usize,
    n_angular: usize,
) -> Result<QuadratureGrid<D>> {
    check_radii(r0, r1)?;
    check_orders::<D>(n_radial, n_angular)?;
    let rule = gauss_legendre(n_radial);
    let (mut offsets, mut weights) = (Vec::new(), Vec::new());
    rules::gauss_panel(&rule, 0.0, r1 - r0, &mut offsets, &mut weights);
    Ok(QuadratureGrid {
        angular: AngularRule::new(n_angular)?,
        radial: alloc::vec![RadialRule::with_jacobian(r0, offsets, weights, D)],
        r0,
        r1,
    })
}

/// Panels whose log integrand stays this far below the peak are dropped;
/// their total contribution is below `e^{−SKIP_DEPTH}` relative.
pub const SKIP_DEPTH: f64 = 100.0;

/// Largest panel width as a fraction of `r1 − r0`.
const MAX_PANEL_FRACTION: f64 = 0.125;

/// Composite rule adapted to the log integrand `ℓ(r + δ)`, evaluated as
/// `ell(r, δ)`, which is assumed to have a single dominant peak on
/// `(r0, r1)`. `ell` only needs to be accurate up to an additive constant
/// depending on `r`, and relative to `δ` for small `δ`.
///
/// The rule's reference radius is the peak `r*`. Breakpoints sit at
/// `r* ± h·2^k` with `h = (−ℓ''(r*))^{−1/2}` the peak width, capped at an
/// eighth of the support, and are graded geometrically toward both edges.
pub fn adapted_radial_rule(
    ell: impl Fn(f64, f64) -> f64,
    r0: f64,
    r1: f64,
    panel_order: usize,
    d: usize,
) -> RadialRule {
    let width = r1 - r0;
    let mut scan: Vec<f64> = (1..256).map(|i| width * i as f64 / 256.0).collect();
    for k in 4..=30 {
        let off = width * 10f64.powf(-(k as f64) / 2.0);
        scan.push(off);
        scan.push(width - off);
    }
    scan.sort_by(f64::total_cmp);
    let values: Vec<f64> = scan.iter().map(|o| ell(r0, *o)).collect();
    let best =
        (0..scan.len())
            .filter(|i| values[*i].is_finite())
            .fold(None, |acc: Option<usize>, i| match acc {
                Some(b) if values[b] >= values[i] => Some(b),
                _ => Some(i),
            });
    let Some(best) = best else {
        return RadialRule {
            reference: r0,
            ..RadialRule::default()
        };
    };

    // golden section on offsets from the best scan point
    let base = r0 + scan[best];
    let f = |o: f64| ell(base, o);
    let mut lo = if best == 0 {
        -scan[0]
    } else {
        scan[best - 1] - scan[best]
    };
    let mut hi = if best + 1 == scan.len() {
        width - scan[best]
    } else {
        scan[best + 1] - scan[best]
    };
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut a = hi - g * (hi - lo);
    let mut b = lo + g * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    for _ in 0..200 {
        if hi - lo <= 1e-15 * base {
            break;
        }
        if fa >= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - g * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + g * (hi - lo);
            fb = f(b);
        }
    }
    let peak = base + 0.5 * (lo + hi);
    let ell = |o: f64| ell(peak, o);
    let top = ell(0.0);
    let (below, above) = (r0 - peak, r1 - peak);

    let mut h = width * MAX_PANEL_FRACTION;
    let mut delta = width * 1e-3;
    for _ in 0..8 {
        let step = delta.min(-0.5 * below).min(0.5 * above);
        let curvature = -(ell(step) - 2.0 * top + ell(-step)) / (step * step);
        if !(curvature > 0.0 && curvature.is_finite()) {
            break;
        }
        h = (1.0 / curvature.sqrt()).min(width * MAX_PANEL_FRACTION);
        if step <= 0.1 * h {
            break;
        }
        delta = 0.05 * h;
    }

    let mut breaks = alloc::vec![below, 0.0, above];
    let mut k = 0;
    loop {
        let off = h * 2f64.powi(k);
        let mut added = false;
        if off < above {
            breaks.push(off);
            added = true;
        }
        if -off > below {
            breaks.push(-off);
            added = true;
        }
        if !added {
            break;
        }
        k += 1;
    }
    // Test-function profiles are flat but not analytic at the support edges;
    // geometric grading toward each edge restores fast convergence there.
    for k in 3..60 {
        let off = width * 0.5f64.powi(k);
        let live: Vec<f64> = [below + off, above - off]
            .into_iter()
            .filter(|o| ell(*o) >= top - SKIP_DEPTH)
            .collect();
        if live.is_empty() {
            break;
        }
        breaks.extend(live);
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|x, y| (*x - *y).abs() <= 1e-15 * peak);

    let rule = gauss_legendre(panel_order);
    let (mut offsets, mut weights) = (Vec::new(), Vec::new());
    for pair in breaks.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let probe = ell(a).max(ell(0.5 * (a + b))).max(ell(b));
        if probe < top - SKIP_DEPTH {
            continue;
        }
        rules::gauss_panel(&rule, a, b, &mut offsets, &mut weights);
    }
    RadialRule::with_jacobian(peak, offsets, weights, d)
}

/// Grid whose radial rule in direction `θ` is adapted to the log integrand
/// `ell(θ, r, δ) = ℓ_θ(r + δ)`, which should include the Jacobian
/// `(d−1) ln r`. With `shared` set only the first direction is analysed and
/// its rule reused, which is exact when `ell` does not depend on `θ`.
pub fn peaked_grid<const D: usize>(
    r0: f64,
    r1: f64,
    spec: &QuadratureSpec,
    shared: bool,
    ell: impl Fn(&Vector<D>, f64, f64) -> f64,
) -> Result<QuadratureGrid<D>> {
    check_radii(r0, r1)?;
    check_orders::<D>(spec.panel_order, spec.angular_order)?;
    let angular = AngularRule::new(spec.angular_order)?;
    let rule_for =
        |dir: &Vector<D>| adapted_radial_rule(|r, o| ell(dir, r, o), r0, r1, spec.panel_order, D);
    let radial = if shared {
        alloc::vec![rule_for(&angular.directions[0])]
    } else {
        angular.directions.iter().map(rule_for).collect()
    };
    Ok(QuadratureGrid {
        angular,
        radial,
        r0,
        r1,
    })
}

/// Grid adapted to integrands dominated by `w^{−exponent}|u|²` on the
/// support of `u`. For an isotropic weight a single radial rule is shared by
/// all directions.
pub fn adapted_grid<const D: usize>(
    weight: &WeightFunction<D>,
    exponent: f64,
    u: &TestFunction<D>,
    spec: &QuadratureSpec,
) -> Result<QuadratureGrid<D>> {
    let (r0, r1) = u.support();
    peaked_grid(r0, r1, spec, weight.is_isotropic(), |dir, r, o| {
        let lw = if exponent == 0.0 {
            0.0
        } else {
            -exponent * weight.ln_w_increment(dir, r, o)
        };
        lw + 2.0 * u.ln_profile_offset(r, o) + (D as f64 - 1.0) * (o / r).ln_1p()
    })
}

/// Integrates `K` integrands sharing a log factor. The factor at a node on
/// ray `θ` is `base(θ, r_ref) + ℓ`, where `f(p)` returns `(ℓ, values)` and the
/// integrands are `values[k]·e^{base + ℓ}`, or `None` where all of them
/// vanish. Keeping the large, per-ray part in `base` lets integrals with
/// factors like `w^{−2α}`, `α ~ 10¹⁵`, be compared without rounding the
/// factor at each node.
pub fn integrate_about<const D: usize, const K: usize, E, B, F>(
    grid: &QuadratureGrid<D>,
    exec: &E,
    base: B,
    f: F,
) -> [Scaled; K]
where
    E: Executor,
    B: Fn(&Vector<D>, f64) -> f64 + Sync + Send,
    F: Fn(&RayPoint<D>) -> Option<(f64, [f64; K])> + Sync + Send,
{
    let per_direction = exec.map(grid.angular.len(), |j| {
        let direction = grid.angular.directions[j];
        let aw = grid.angular.weights[j];
        let rule = grid.radial(j);
        let mut lns = Vec::with_capacity(rule.len());
        let mut terms = Vec::with_capacity(rule.len());
        for (offset, w) in rule.offsets.iter().zip(&rule.weights) {
            let p = RayPoint {
                x: direction * (rule.reference + offset),
                direction,
                reference: rule.reference,
                offset: *offset,
            };
            if let Some((ln, values)) = f(&p) {
                lns.push(ln);
                terms.push(values.map(|v| v * w * aw));
            }
        }
        if lns.is_empty() {
            return [Scaled::ZERO; K];
        }
        scaled_sums_about(base(&direction, rule.reference), &lns, &terms)
    });
    core::array::from_fn(|k| {
        let parts: Vec<(f64, f64)> = per_direction
            .iter()
            .map(|s| (s[k].ln_scale, s[k].value))
            .collect();
        scaled_sum(&parts)
    })
}

/// [`integrate_about`] with a zero base.
pub fn integrate<const D: usize, const K: usize, E, F>(
    grid: &QuadratureGrid<D>,
    exec: &E,
    f: F,
) -> [Scaled; K]
where
    E: Executor,
    F: Fn(&RayPoint<D>) -> Option<(f64, [f64; K])> + Sync + Send,
{
    integrate_about(grid, exec, |_, _| 0.0, f)
}

/// Plain (unscaled) integral of one integrand.
pub fn integrate_plain<const D: usize, E, F>(grid: &QuadratureGrid<D>, exec: &E, f: F) -> f64
where
    E: Executor,
    F: Fn(&Vector<D>) -> f64 + Sync + Send,
{
    let [s] = integrate(grid, exec, |p| Some((0.0, [f(&p.x)])));
    s.rescaled(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Sequential;
    use crate::jet::Matrix;
    use core::f64::consts::PI;

    #[test]
    fn annulus_area_and_moment() {
        let g = annulus_grid::<2>(0.2, 0.8, 16, 16).unwrap();
        let area = integrate_plain(&g, &Sequential, |_| 1.0);
        assert!((area - 0.6 * PI).abs() < 1e-12);
        let g = annulus_grid::<3>(0.2, 0.8, 16, 16).unwrap();
        let m = integrate_plain(&g, &Sequential, |x| x.norm_squared());
        let exact = 4.0 * PI * (0.8f64.powi(5) - 0.2f64.powi(5)) / 5.0;
        assert!((m - exact).abs() < 1e-12 * exact);
        let g = annulus_grid::<1>(0.2, 0.8, 8, 0).unwrap();
        assert!((integrate_plain(&g, &Sequential, |_| 1.0) - 1.2).abs() < 1e-14);
    }

    #[test]
    fn bump_square_converges_under_doubling() {
        let u = make_bump::<2>(0.2, 0.8, Modulation::None).unwrap();
        let f = |x: &Vector<2>| u.value(x).norm_sqr();
        let a = integrate_plain(&annulus_grid::<2>(0.2, 0.8, 64, 8).unwrap(), &Sequential, f);
        let b = integrate_plain(
            &annulus_grid::<2>(0.2, 0.8, 128, 16).unwrap(),
            &Sequential,
            f,
        );
        assert!(((a - b) / b).abs() < 1e-8);
    }

    /// `2λ − exponent·(ln w − ln w(r_ref θ))` along the ray.
    fn ln_factor(
        w: &WeightFunction<2>,
        u: &TestFunction<2>,
        exponent: f64,
        p: &RayPoint<2>,
    ) -> f64 {
        2.0 * u.ln_profile_offset(p.reference, p.offset)
            - exponent * w.ln_w_increment(&p.direction, p.reference, p.offset)
    }

    #[test]
    fn adapted_grid_agrees_with_plain_grid_for_moderate_alpha() {
        let w = WeightFunction::from_a0(&Matrix::<2>::identity(), 1.0, 1.0).unwrap();
        let u = make_bump::<2>(0.3, 0.7, Modulation::None).unwrap();
        let spec = QuadratureSpec {
            panel_order: 16,
            angular_order: 16,
        };
        let e = 7.0;
        let f = |p: &RayPoint<2>| {
            u.scaled_jet(&p.x)
                .map(|(_, j)| (ln_factor(&w, &u, e, p), [j.modulus_sq()]))
        };
        let base = |d: &Vector<2>, r: f64| -e * w.ln_w_ray(d, r);
        let [a] = integrate_about(
            &adapted_grid(&w, e, &u, &spec).unwrap(),
            &Sequential,
            base,
            f,
        );
        let [b] = integrate_about(
            &annulus_grid::<2>(0.3, 0.7, 256, 16).unwrap(),
            &Sequential,
            base,
            f,
        );
        assert!(a.relative_change(&b) < 1e-10, "{a:?} {b:?}");
    }

    #[test]
    fn adapted_grid_handles_huge_exponents() {
        let a0 = Matrix::<2>::new(1.2, 0.1, 0.1, 0.9);
        let u = make_bump::<2>(0.3, 0.7, Modulation::None).unwrap();
        let spec = QuadratureSpec {
            panel_order: 12,
            angular_order: 16,
        };
        for (a0, e) in [
            (Matrix::<2>::identity(), 1e7),
            (Matrix::<2>::identity(), 2e15),
            (a0, 6.0),
        ] {
            let w = WeightFunction::from_a0(&a0, 1.0, 1.0).unwrap();
            let f = |p: &RayPoint<2>| {
                u.scaled_jet(&p.x)
                    .map(|(_, j)| (ln_factor(&w, &u, e, p), [j.modulus_sq()]))
            };
            let base = |d: &Vector<2>, r: f64| -e * w.ln_w_ray(d, r);
            let [a] = integrate_about(
                &adapted_grid(&w, e, &u, &spec).unwrap(),
                &Sequential,
                base,
                f,
            );
            let [b] = integrate_about(
                &adapted_grid(&w, e, &u, &spec.doubled()).unwrap(),
                &Sequential,
                base,
                f,
            );
            assert!(e < 1e3 || a.ln_scale > 1e6);
            assert!(a.relative_change(&b) < 1e-8, "{e} {a:?} {b:?}");
        }
    }
}
