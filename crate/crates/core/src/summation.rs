//! Deterministic summation.
//!
//! Every reduction in the crate goes through [`pairwise_sum`], whose result
//! depends only on the order of its input slice. Leaves of the pairwise tree
//! are summed with Neumaier compensation.

use alloc::vec::Vec;
#[allow(unused_imports)] // inherent methods shadow it whenever std is linked
use num_traits::Float;

const LEAF: usize = 32;

/// Pairwise (cascade) sum with compensated leaves.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= LEAF {
        return neumaier(values);
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

fn neumaier(values: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for &v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// A real number stored as `value · e^{ln_scale}`.
///
/// Integrands of the Carleman inequality carry factors like `w^{-2α}` with
/// `α` in the millions, far outside the f64 range, so integrals are kept in
/// this form until they are compared.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Scaled {
    pub value: f64,
    pub ln_scale: f64,
}

impl Scaled {
    pub const ZERO: Scaled = Scaled {
        value: 0.0,
        ln_scale: 0.0,
    };

    pub fn is_zero(&self) -> bool {
        self.value == 0.0
    }

    /// Natural log of the magnitude; `-inf` for zero.
    pub fn ln_abs(&self) -> f64 {
        if self.value == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.value.abs().ln() + self.ln_scale
        }
    }

    /// Re-express with a different scale.
    pub fn rescaled(&self, ln_scale: f64) -> f64 {
        if self.value == 0.0 {
            0.0
        } else {
            self.value * (self.ln_scale - ln_scale).exp()
        }
    }

    /// Ratio `self / other` as a plain number.
    pub fn ratio(&self, other: &Scaled) -> f64 {
        (self.value / other.value) * (self.ln_scale - other.ln_scale).exp()
    }

    pub fn add(&self, other: &Scaled) -> Scaled {
        let scale = self.ln_scale.max(other.ln_scale);
        Scaled {
            value: self.rescaled(scale) + other.rescaled(scale),
            ln_scale: scale,
        }
    }

    pub fn scale_by(&self, factor: f64) -> Scaled {
        Scaled {
            value: self.value * factor,
            ln_scale: self.ln_scale,
        }
    }

    /// Relative difference `|self - other| / |other|`.
    pub fn relative_change(&self, reference: &Scaled) -> f64 {
        if reference.value == 0.0 {
            return if self.value == 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
        }
        let scale = reference.ln_scale;
        ((self.rescaled(scale) - reference.value) / reference.value).abs()
    }
}

/// Sum of terms `value_i · e^{ln_i}` normalized by the largest `ln_i` among
/// non-zero terms, then added pairwise.
pub fn scaled_sum(terms: &[(f64, f64)]) -> Scaled {
    let scale = terms
        .iter()
        .filter(|(ln, v)| *v != 0.0 && ln.is_finite())
        .map(|(ln, _)| *ln)
        .fold(f64::NEG_INFINITY, f64::max);
    if !scale.is_finite() {
        return Scaled::ZERO;
    }
    let normalized: Vec<f64> = terms
        .iter()
        .map(|&(ln, v)| {
            if v == 0.0 || !ln.is_finite() {
                0.0
            } else {
                v * (ln - scale).exp()
            }
        })
        .collect();
    Scaled {
        value: pairwise_sum(&normalized),
        ln_scale: scale,
    }
}

/// Several integrals sharing one normalization: `terms[i][k]` is the value of
/// integral `k` at node `i`, all multiplied by the common `e^{ln_i}`.
pub fn scaled_sums<const K: usize>(ln_factors: &[f64], terms: &[[f64; K]]) -> [Scaled; K] {
    let scale = ln_factors
        .iter()
        .zip(terms)
        .filter(|(ln, t)| ln.is_finite() && t.iter().any(|v| *v != 0.0))
        .map(|(ln, _)| *ln)
        .fold(f64::NEG_INFINITY, f64::max);
    if !scale.is_finite() {
        return [Scaled::ZERO; K];
    }
    let factors: Vec<f64> = ln_factors
        .iter()
        .map(|ln| {
            if ln.is_finite() {
                (ln - scale).exp()
            } else {
                0.0
            }
        })
        .collect();
    core::array::from_fn(|k| {
        let column: Vec<f64> = factors
            .iter()
            .zip(terms)
            .map(|(f, t)| if *f == 0.0 { 0.0 } else { f * t[k] })
            .collect();
        Scaled {
            value: pairwise_sum(&column),
            ln_scale: scale,
        }
    })
}

/// As [`scaled_sums`] with `ln_i = base + relative[i]`. The result keeps
/// `base` as its scale whenever the relative factors fit in f64, so sums
/// sharing a base compare exactly even when `base` is so large that its ulp
/// exceeds one.
pub fn scaled_sums_about<const K: usize>(
    base: f64,
    relative: &[f64],
    terms: &[[f64; K]],
) -> [Scaled; K] {
    let top = relative
        .iter()
        .zip(terms)
        .filter(|(ln, t)| ln.is_finite() && t.iter().any(|v| *v != 0.0))
        .map(|(ln, _)| *ln)
        .fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return [Scaled::ZERO; K];
    }
    // The shift is chosen so that `base + shift` is exact.
    let shift = if top.abs() <= 600.0 {
        0.0
    } else {
        (base + top) - base
    };
    let mut sums = scaled_sums(
        &relative.iter().map(|ln| ln - shift).collect::<Vec<_>>(),
        terms,
    );
    for s in &mut sums {
        if !s.is_zero() {
            *s = Scaled {
                value: s.value * s.ln_scale.exp(),
                ln_scale: base + shift,
            };
        }
    }
    sums
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn pairwise_matches_exact_integer_sum() {
        let values: Vec<f64> = (1..=10_000).map(|k| k as f64).collect();
        assert_eq!(pairwise_sum(&values), 50_005_000.0);
    }

    #[test]
    fn compensation_recovers_small_terms() {
        let mut values = vec![1.0e16];
        values.extend(core::iter::repeat(1.0).take(20));
        values.push(-1.0e16);
        assert_eq!(pairwise_sum(&values), 20.0);
    }

    #[test]
    fn scaled_sum_handles_huge_exponents() {
        let s = scaled_sum(&[(5.0e6, 1.0), (5.0e6 - 2f64.ln(), 2.0)]);
        // 5e6 carries only ~1e-9 absolute precision
        assert!((s.value - 2.0).abs() < 1e-8);
        assert_eq!(s.ln_scale, 5.0e6);
        assert!((s.ln_abs() - (5.0e6 + 2f64.ln())).abs() < 1e-9);
    }

    #[test]
    fn sums_about_a_huge_base_keep_the_base() {
        let base = 3.0e15;
        let [a, b] = scaled_sums_about(base, &[0.0, -2f64.ln()], &[[1.0, 2.0], [2.0, 0.0]]);
        assert_eq!(a.ln_scale, base);
        assert!((a.value - 2.0).abs() < 1e-15);
        assert!((b.value - 2.0).abs() < 1e-15);
        let [c] = scaled_sums_about(1.0, &[1000.0], &[[1.0]]);
        assert_eq!((c.value, c.ln_scale), (1.0, 1001.0));
    }

    #[test]
    fn scaled_ratio_across_scales() {
        let a = Scaled {
            value: 3.0,
            ln_scale: 1000.0,
        };
        let b = Scaled {
            value: 1.5,
            ln_scale: 1000.0 + 2f64.ln(),
        };
        assert!((a.ratio(&b) - 1.0).abs() < 1e-12);
        let c = Scaled {
            value: 3.0,
            ln_scale: 0.5,
        };
        let d = Scaled {
            value: 1.5,
            ln_scale: 0.5 + 2f64.ln(),
        };
        assert!((c.ratio(&d) - 1.0).abs() < 1e-12);
    }
}
