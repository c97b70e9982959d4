//! Outward rounded interval arithmetic for auditing closed-form constants.
//!
//! Each operation computes the round-to-nearest result and widens it by one
//! ulp in each direction, which encloses the exact result for `+ - * /` and
//! `sqrt`. For `exp` and `ln` libm is accurate to well under one ulp, so two
//! ulps are used.

use core::ops::{Add, Div, Mul, Neg, Sub};
#[allow(unused_imports)] // inherent methods shadow it whenever std is linked
use num_traits::Float;

fn up(x: f64) -> f64 {
    x.next_up()
}

fn down(x: f64) -> f64 {
    x.next_down()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi);
        Interval { lo, hi }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn sqrt(self) -> Self {
        Interval {
            lo: down(Float::sqrt(self.lo.max(0.0))).max(0.0),
            hi: up(Float::sqrt(self.hi)),
        }
    }

    pub fn exp(self) -> Self {
        Interval {
            lo: down(down(Float::exp(self.lo))).max(0.0),
            hi: up(up(Float::exp(self.hi))),
        }
    }

    pub fn ln(self) -> Self {
        Interval {
            lo: down(down(Float::ln(self.lo))),
            hi: up(up(Float::ln(self.hi))),
        }
    }

    pub fn powi(self, n: i32) -> Self {
        let mut acc = Interval::point(1.0);
        for _ in 0..n.unsigned_abs() {
            acc = acc * self;
        }
        if n < 0 {
            Interval::point(1.0) / acc
        } else {
            acc
        }
    }

    pub fn max(self, other: Self) -> Self {
        Interval {
            lo: self.lo.max(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    pub fn abs(self) -> Self {
        if self.lo >= 0.0 {
            self
        } else if self.hi <= 0.0 {
            -self
        } else {
            Interval {
                lo: 0.0,
                hi: (-self.lo).max(self.hi),
            }
        }
    }
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, o: Interval) -> Interval {
        Interval {
            lo: down(self.lo + o.lo),
            hi: up(self.hi + o.hi),
        }
    }
}

impl Sub for Interval {
    type Output = Interval;
    fn sub(self, o: Interval) -> Interval {
        Interval {
            lo: down(self.lo - o.hi),
            hi: up(self.hi - o.lo),
        }
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }
}

impl Mul for Interval {
    type Output = Interval;
    fn mul(self, o: Interval) -> Interval {
        let p = [
            self.lo * o.lo,
            self.lo * o.hi,
            self.hi * o.lo,
            self.hi * o.hi,
        ];
        let lo = p.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Interval {
            lo: down(lo),
            hi: up(hi),
        }
    }
}

impl Div for Interval {
    type Output = Interval;
    fn div(self, o: Interval) -> Interval {
        if o.lo <= 0.0 && o.hi >= 0.0 {
            return Interval {
                lo: f64::NEG_INFINITY,
                hi: f64::INFINITY,
            };
        }
        let p = [
            self.lo / o.lo,
            self.lo / o.hi,
            self.hi / o.lo,
            self.hi / o.hi,
        ];
        let lo = p.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Interval {
            lo: down(lo),
            hi: up(hi),
        }
    }
}

/// Arithmetic shared by `f64` and [`Interval`], so constant formulas can be
/// written once and evaluated either way.
pub trait Num:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn of(x: f64) -> Self;
    fn sqrt(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn max(self, other: Self) -> Self;
    fn abs(self) -> Self;
    /// Midpoint for `f64`-valued decisions (branch selection).
    fn mid(self) -> f64;
}

impl Num for f64 {
    fn of(x: f64) -> Self {
        x
    }
    fn sqrt(self) -> Self {
        Float::sqrt(self)
    }
    fn exp(self) -> Self {
        Float::exp(self)
    }
    fn ln(self) -> Self {
        Float::ln(self)
    }
    fn max(self, other: Self) -> Self {
        Float::max(self, other)
    }
    fn abs(self) -> Self {
        Float::abs(self)
    }
    fn mid(self) -> f64 {
        self
    }
}

impl Num for Interval {
    fn of(x: f64) -> Self {
        Interval::point(x)
    }
    fn sqrt(self) -> Self {
        Interval::sqrt(self)
    }
    fn exp(self) -> Self {
        Interval::exp(self)
    }
    fn ln(self) -> Self {
        Interval::ln(self)
    }
    fn max(self, other: Self) -> Self {
        Interval::max(self, other)
    }
    fn abs(self) -> Self {
        Interval::abs(self)
    }
    fn mid(self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}
