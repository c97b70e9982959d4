//! Small dense helpers on fixed-size matrices.

use crate::error::{CoreError, Result};
use crate::jet::{Matrix, Vector};
#[allow(unused_imports)] // inherent methods shadow it whenever std is linked
use num_traits::Float;

pub fn asymmetry<const D: usize>(m: &Matrix<D>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..D {
        for j in 0..i {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

pub fn is_symmetric<const D: usize>(m: &Matrix<D>) -> bool {
    asymmetry(m) <= 1e-12 * m.abs().max().max(1.0)
}

/// Row-sum norm ‖M‖∞.
pub fn row_sum_norm<const D: usize>(m: &Matrix<D>) -> f64 {
    (0..D)
        .map(|i| m.row(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Smallest and largest eigenvalue of a symmetric matrix.
pub fn eigen_range<const D: usize>(m: &Matrix<D>) -> (f64, f64) {
    let eig = symmetric_eigenvalues(m);
    let lo = eig.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
pub fn symmetric_eigenvalues<const D: usize>(m: &Matrix<D>) -> Vector<D> {
    let mut a = (m + m.transpose()) * 0.5;
    let scale = a.norm();
    for _sweep in 0..64 {
        let off: f64 = (0..D)
            .flat_map(|i| (0..i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        if off.sqrt() <= 1e-17 * scale {
            break;
        }
        for p in 0..D {
            for q in p + 1..D {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..D {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..D {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    Vector::<D>::from_fn(|i, _| a[(i, i)])
}

pub fn spd_inverse<const D: usize>(m: &Matrix<D>) -> Result<Matrix<D>> {
    let chol = m.cholesky().ok_or_else(|| CoreError::NotPositiveDefinite {
        min_eigenvalue: eigen_range(m).0,
    })?;
    Ok(chol.inverse())
}

/// `sup_{|v| = 1} ‖Σ_k v_k G_k‖∞`, exactly.
///
/// For a fixed row `i` the supremum over `v` of `Σ_j |Σ_k v_k G_k[i][j]|`
/// equals the largest Euclidean norm of `c(s)_k = Σ_j s_j G_k[i][j]` over
/// sign vectors `s`.
pub fn directional_row_sum_bound<const D: usize>(slopes: &[Matrix<D>; D]) -> f64 {
    let mut best = 0.0f64;
    for i in 0..D {
        for signs in 0u32..(1u32 << D) {
            let c = Vector::<D>::from_fn(|k, _| {
                (0..D)
                    .map(|j| {
                        let s = if signs & (1 << j) != 0 { -1.0 } else { 1.0 };
                        s * slopes[k][(i, j)]
                    })
                    .sum()
            });
            best = best.max(c.norm());
        }
    }
    best
}

/// `max_i ‖(Σ_j |G_k[i][j]|)_k‖₂`, an upper bound for
/// `sup_{|v|=1, |t_k| ≤ 1} ‖Σ_k v_k t_k G_k‖∞`.
pub fn modulated_row_sum_bound<const D: usize>(slopes: &[Matrix<D>; D]) -> f64 {
    (0..D)
        .map(|i| Vector::<D>::from_fn(|k, _| (0..D).map(|j| slopes[k][(i, j)].abs()).sum()).norm())
        .fold(0.0, f64::max)
}

/// Largest `|ξᵀMξ| / ξᵀAξ` over all ξ, for symmetric `M` and SPD `A`.
pub fn generalized_spectral_radius<const D: usize>(m: &Matrix<D>, a: &Matrix<D>) -> Option<f64> {
    let chol = a.cholesky()?;
    let l_inv = chol.l().try_inverse()?;
    let reduced = l_inv * m * l_inv.transpose();
    let sym = (reduced + reduced.transpose()) * 0.5;
    let (lo, hi) = eigen_range(&sym);
    Some(lo.abs().max(hi.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_sum_norm_of_known_matrix() {
        let m = Matrix::<2>::new(1.0, -2.0, 0.5, 0.25);
        assert_eq!(row_sum_norm(&m), 3.0);
    }

    #[test]
    fn directional_bound_scalar_multiple_of_identity() {
        let slopes = [Matrix::<2>::identity() * 0.1, Matrix::<2>::zeros()];
        assert!((directional_row_sum_bound(&slopes) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn directional_bound_dominates_sampled_directions() {
        let slopes = [
            Matrix::<2>::new(0.3, -0.1, -0.1, 0.2),
            Matrix::<2>::new(-0.05, 0.2, 0.2, 0.1),
        ];
        let bound = directional_row_sum_bound(&slopes);
        let mut best = 0.0f64;
        for k in 0..20_000 {
            let t = k as f64 * core::f64::consts::TAU / 20_000.0;
            let m = slopes[0] * t.cos() + slopes[1] * t.sin();
            best = best.max(row_sum_norm(&m));
        }
        assert!(best <= bound + 1e-15);
        assert!(best >= bound * (1.0 - 1e-6));
    }

    #[test]
    fn jacobi_eigenvalues_of_known_matrix() {
        // eigenvalues 1, 2, 4
        let m = Matrix::<3>::new(2.0, 0.0, 0.0, 0.0, 3.0, 1.0, 0.0, 1.0, 3.0);
        let (lo, hi) = eigen_range(&m);
        assert!((lo - 2.0).abs() < 1e-14 && (hi - 4.0).abs() < 1e-14);
        let mut e: [f64; 3] = symmetric_eigenvalues(&m).into();
        e.sort_by(f64::total_cmp);
        assert!((e[0] - 2.0).abs() < 1e-14 && (e[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn generalized_radius_identity_metric() {
        let m = Matrix::<2>::new(2.0, 0.0, 0.0, -3.0);
        let r = generalized_spectral_radius(&m, &Matrix::<2>::identity()).unwrap();
        assert!((r - 3.0).abs() < 1e-12);
    }
}
