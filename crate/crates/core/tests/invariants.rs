use carleman_core::constants::ConstantsReport;
use carleman_core::exec::Sequential;
use carleman_core::harness::carleman_sides;
use carleman_core::interval::Interval;
use carleman_core::params::{make_constant_field, ProblemParams};
use carleman_core::quadrature::{make_bump, Modulation, QuadratureSpec};
use carleman_core::summation::{pairwise_sum, scaled_sum, Scaled};
use carleman_core::weight::{ein, WeightFunction};
use carleman_core::{Jet, Matrix, Vector};
use proptest::prelude::*;

fn jet2() -> impl Strategy<Value = Jet<2>> {
    (
        -3.0..3.0f64,
        prop::array::uniform2(-3.0..3.0f64),
        prop::array::uniform3(-3.0..3.0f64),
    )
        .prop_map(|(v, g, h)| Jet {
            value: v,
            grad: Vector::<2>::new(g[0], g[1]),
            hess: Matrix::<2>::new(h[0], h[1], h[1], h[2]),
        })
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
}

fn scaled_close(a: &Scaled, b: &Scaled, rel: f64) -> bool {
    a.relative_change(b) <= rel
}

proptest! {
    #[test]
    fn pairwise_sum_is_close_to_naive(values in prop::collection::vec(-1e3..1e3f64, 0..300)) {
        let naive: f64 = values.iter().sum();
        let scale: f64 = values.iter().map(|v| v.abs()).sum();
        prop_assert!((pairwise_sum(&values) - naive).abs() <= 1e-12 * scale.max(1.0));
    }

    #[test]
    fn scaled_sum_is_shift_invariant(
        terms in prop::collection::vec((-50.0..50.0f64, -10.0..10.0f64), 1..100),
        shift in -1e5..1e5f64,
    ) {
        let a = scaled_sum(&terms);
        let shifted: Vec<_> = terms.iter().map(|&(ln, v)| (ln + shift, v)).collect();
        let b = scaled_sum(&shifted);
        prop_assert!(close(a.value, b.value, 1e-9));
        if !a.is_zero() {
            prop_assert!((b.ln_scale - a.ln_scale - shift).abs() <= 1e-9 * shift.abs().max(1.0));
        }
    }

    #[test]
    fn scaled_add_matches_plain_add(x in -1e3..1e3f64, y in -1e3..1e3f64, lx in -20.0..20.0f64, ly in -20.0..20.0f64) {
        let a = Scaled { value: x, ln_scale: lx };
        let b = Scaled { value: y, ln_scale: ly };
        let plain = x * lx.exp() + y * ly.exp();
        let sum = a.add(&b).rescaled(0.0);
        prop_assert!((sum - plain).abs() <= 1e-12 * (x * lx.exp()).abs().max((y * ly.exp()).abs()).max(1e-300));
    }

    #[test]
    fn jet_product_is_commutative(a in jet2(), b in jet2()) {
        let (ab, ba) = (a.mul(&b), b.mul(&a));
        prop_assert!(close(ab.value, ba.value, 1e-14));
        prop_assert!((ab.grad - ba.grad).norm() <= 1e-12 * ab.grad.norm().max(1.0));
        prop_assert!((ab.hess - ba.hess).norm() <= 1e-12 * ab.hess.norm().max(1.0));
    }

    #[test]
    fn compose_with_square_is_self_product(a in jet2()) {
        let sq = a.compose(a.value * a.value, 2.0 * a.value, 2.0);
        let prod = a.mul(&a);
        prop_assert!((sq.grad - prod.grad).norm() <= 1e-12 * prod.grad.norm().max(1.0));
        prop_assert!((sq.hess - prod.hess).norm() <= 1e-12 * prod.hess.norm().max(1.0));
    }

    #[test]
    fn interval_arithmetic_encloses_f64(x in 0.1..10.0f64, y in 0.1..10.0f64, z in -5.0..5.0f64) {
        let (ix, iy, iz) = (Interval::point(x), Interval::point(y), Interval::point(z));
        let e = ((ix * iy + iz) / (ix + iy)).exp() - (iy.sqrt() * iz).abs() + ix.ln().powi(3);
        let f = ((x * y + z) / (x + y)).exp() - (y.sqrt() * z).abs() + x.ln().powi(3);
        prop_assert!(e.contains(f), "{e:?} does not contain {f}");
    }

    #[test]
    fn ein_is_increasing_and_below_identity(z in 1e-8..200.0f64, dz in 1e-3..10.0f64) {
        prop_assert!(ein(z + dz) > ein(z));
        prop_assert!(ein(z) <= z && ein(z) > 0.0);
    }

    /// Along every ray `w` increases with the radius, and the ray-relative
    /// form agrees with direct evaluation.
    #[test]
    fn weight_increases_along_rays(
        a in 0.3..3.0f64, b in 0.3..3.0f64, off in -0.2..0.2f64,
        angle in 0.0..std::f64::consts::TAU, r in 0.05..0.9f64, dr in 1e-3..0.1f64, mu in 0.1..4.0f64,
    ) {
        let a0 = Matrix::<2>::new(a, off, off, b);
        prop_assume!(a0.symmetric_eigenvalues().min() > 0.0);
        let w = WeightFunction::from_a0(&a0, 1.0, mu).unwrap();
        let dir = Vector::<2>::new(angle.cos(), angle.sin());
        prop_assert!(w.ln_w_ray(&dir, r + dr) > w.ln_w_ray(&dir, r));
        prop_assert!((w.ln_w_ray(&dir, r) - w.ln_w(&(dir * r))).abs() <= 1e-12);
        let inc = w.ln_w_increment(&dir, r, dr);
        prop_assert!(close(inc, w.ln_w_ray(&dir, r + dr) - w.ln_w_ray(&dir, r), 1e-8));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    /// The Carleman integrals of `u` are the sums of those of `Re u` and
    /// `Im u`, and the sides are exactly their defining multiples.
    #[test]
    fn carleman_integrals_split_into_real_parts(
        k in prop::array::uniform2(-4.0..4.0f64),
        r0 in 0.1..0.4f64, width in 0.2..0.5f64, scale in 0.0..3.0f64,
    ) {
        let field = make_constant_field(Matrix::<2>::identity(), 1.0).unwrap();
        let constants = ConstantsReport::evaluate(&ProblemParams::laplacian(2, 1.0));
        let alpha = constants.theorem_constants().unwrap().1 * 10f64.powf(scale);
        let spec = QuadratureSpec { panel_order: 12, angular_order: 16 };
        let u = make_bump(r0, r0 + width, Modulation::PlaneWave { wavevector: k }).unwrap();
        let (re, im) = u.parts();
        let whole = carleman_sides(&field, &constants, &u, alpha, &spec, &Sequential).unwrap();
        let re = carleman_sides(&field, &constants, &re, alpha, &spec, &Sequential).unwrap();
        let im = carleman_sides(&field, &constants, &im.unwrap(), alpha, &spec, &Sequential).unwrap();
        for i in 0..3 {
            prop_assert!(scaled_close(&re.integrals[i].add(&im.integrals[i]), &whole.integrals[i], 1e-9));
        }
        prop_assert_eq!(whole.lhs_u, whole.integrals[1].scale_by(alpha * alpha * alpha));
        prop_assert_eq!(whole.lhs_grad, whole.integrals[0].scale_by(alpha));
        prop_assert!(whole.integrals.iter().all(|s| s.value > 0.0));
        prop_assert!(whole.ratio >= 1.0 && whole.convergence.certified);
    }
}

/// A real plane wave modulation with zero wavevector is the plain bump, and
/// both paths give bit-identical integrals.
#[test]
fn real_and_complex_paths_agree_for_zero_wavevector() {
    let field = make_constant_field(Matrix::<2>::identity(), 1.0).unwrap();
    let constants = ConstantsReport::evaluate(&ProblemParams::laplacian(2, 1.0));
    let alpha = constants.theorem_constants().unwrap().1;
    let spec = QuadratureSpec {
        panel_order: 12,
        angular_order: 16,
    };
    let plain = make_bump(0.3, 0.7, Modulation::None).unwrap();
    let wave = make_bump(
        0.3,
        0.7,
        Modulation::PlaneWave {
            wavevector: [0.0, 0.0],
        },
    )
    .unwrap();
    let a = carleman_sides(&field, &constants, &plain, alpha, &spec, &Sequential).unwrap();
    let b = carleman_sides(&field, &constants, &wave, alpha, &spec, &Sequential).unwrap();
    assert_eq!(a.integrals, b.integrals);
}
