//! Double-double scalar: a value stored as the unevaluated sum `hi + lo` of
//! two machine doubles, giving roughly 32 significant decimal digits.
//!
//! Addition and multiplication use the accurate double-word algorithms built
//! on the error-free transformations `two_sum` and `two_prod` (the latter
//! through a fused multiply-add). Every operation renormalizes its result so
//! that `hi` is the round-to-nearest double of `hi + lo` and
//! `|lo| <= ulp(hi) / 2`.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

/// Error-free addition: `s + e == a + b` exactly.
#[inline]
pub fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

/// Error-free addition assuming `|a| >= |b|` (or `a == 0`).
#[inline]
pub fn fast_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let e = b - (s - a);
    (s, e)
}

/// Error-free product: `p + e == a * b` exactly, barring underflow.
#[inline]
pub fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let e = a.mul_add(b, -p);
    (p, e)
}

#[derive(Clone, Copy, Default, PartialEq)]
pub struct DoubleDouble {
    pub hi: f64,
    pub lo: f64,
}

impl DoubleDouble {
    pub const ZERO: Self = Self { hi: 0.0, lo: 0.0 };
    pub const ONE: Self = Self { hi: 1.0, lo: 0.0 };
    /// 2^-104.
    pub const EPSILON: f64 = 4.930380657631324e-32;

    /// Builds a renormalized value from an arbitrary pair.
    #[inline]
    pub fn new(hi: f64, lo: f64) -> Self {
        let (h, l) = two_sum(hi, lo);
        Self::finish(h, l)
    }

    #[inline]
    pub const fn from_f64(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }

    /// Nearest double to the represented value.
    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.hi.is_finite() && self.lo.is_finite()
    }

    #[inline]
    pub fn abs(self) -> Self {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            -self
        } else {
            self
        }
    }

    /// Square root by one Newton correction on the double estimate.
    pub fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return if self.hi == 0.0 { Self::ZERO } else { Self::from_f64(f64::NAN) };
        }
        let s = self.hi.sqrt();
        let (p, e) = two_prod(s, s);
        let diff = (self - Self { hi: p, lo: e }).hi;
        let corr = diff / (2.0 * s);
        let (h, l) = fast_two_sum(s, corr);
        Self::finish(h, l)
    }

    // Non-finite results are flagged by an infinite or NaN `hi`; the low word
    // is cleared so it cannot carry a stray NaN into a finite comparison.
    #[inline(always)]
    fn finish(hi: f64, lo: f64) -> Self {
        if hi.is_finite() {
            Self { hi, lo }
        } else {
            Self { hi, lo: 0.0 }
        }
    }
}

impl fmt::Debug for DoubleDouble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DoubleDouble({:e} + {:e})", self.hi, self.lo)
    }
}

impl fmt::Display for DoubleDouble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:e}", self.to_f64())
    }
}

impl From<f64> for DoubleDouble {
    #[inline]
    fn from(x: f64) -> Self {
        Self::from_f64(x)
    }
}

impl From<f32> for DoubleDouble {
    #[inline]
    fn from(x: f32) -> Self {
        Self::from_f64(x as f64)
    }
}

impl Neg for DoubleDouble {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self { hi: -self.hi, lo: -self.lo }
    }
}

impl Add for DoubleDouble {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        let (sh, sl) = two_sum(self.hi, rhs.hi);
        let (th, tl) = two_sum(self.lo, rhs.lo);
        let c = sl + th;
        let (vh, vl) = fast_two_sum(sh, c);
        let w = tl + vl;
        let (zh, zl) = fast_two_sum(vh, w);
        Self::finish(zh, zl)
    }
}

impl Sub for DoubleDouble {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl Mul for DoubleDouble {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        let (ch, cl1) = two_prod(self.hi, rhs.hi);
        let tl0 = self.lo * rhs.lo;
        let tl1 = self.hi.mul_add(rhs.lo, tl0);
        let cl2 = self.lo.mul_add(rhs.hi, tl1);
        let cl3 = cl1 + cl2;
        let (zh, zl) = fast_two_sum(ch, cl3);
        Self::finish(zh, zl)
    }
}

impl Div for DoubleDouble {
    type Output = Self;
    #[inline]
    fn div(self, rhs: Self) -> Self {
        // Quotient estimate, exact remainder, then one correction term.
        let q1 = self.hi / rhs.hi;
        let r = self - rhs * Self::from_f64(q1);
        let q2 = r.hi / rhs.hi;
        let r = r - rhs * Self::from_f64(q2);
        let q3 = r.hi / rhs.hi;
        let (h, l) = fast_two_sum(q1, q2);
        Self::finish(h, l) + Self::from_f64(q3)
    }
}

macro_rules! assign_op {
    ($tr:ident, $m:ident, $op:tt) => {
        impl $tr for DoubleDouble {
            #[inline]
            fn $m(&mut self, rhs: Self) {
                *self = *self $op rhs;
            }
        }
    };
}
assign_op!(AddAssign, add_assign, +);
assign_op!(SubAssign, sub_assign, -);
assign_op!(MulAssign, mul_assign, *);
assign_op!(DivAssign, div_assign, /);

impl PartialOrd for DoubleDouble {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi)? {
            Ordering::Equal => self.lo.partial_cmp(&other.lo),
            ord => Some(ord),
        }
    }
}

impl Sum for DoubleDouble {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::ZERO, |a, b| a + b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn renormalized(x: DoubleDouble) -> bool {
        let (h, _) = two_sum(x.hi, x.lo);
        h == x.hi
    }

    #[test]
    fn additive_identity_and_inverse() {
        let x = DoubleDouble::new(1.2345, 3.0e-18);
        assert_eq!(DoubleDouble::ZERO + x, x);
        let one = DoubleDouble::ONE;
        assert_eq!(one + (-one), DoubleDouble::ZERO);
    }

    #[test]
    fn tiny_addend_lands_in_low_word() {
        let tiny = 2f64.powi(-60);
        let s = DoubleDouble::ONE + DoubleDouble::from_f64(tiny);
        assert_eq!(s.hi, 1.0);
        assert_eq!(s.lo, tiny);
    }

    #[test]
    fn exact_powers_of_two() {
        let p = DoubleDouble::from_f64(2.0) * DoubleDouble::from_f64(0.5);
        assert_eq!(p, DoubleDouble::ONE);
        let x = DoubleDouble::new(3.0, 1e-17);
        assert_eq!(DoubleDouble::ONE * x, x);
    }

    #[test]
    fn square_of_one_plus_two_pow_minus_30() {
        // (1 + 2^-30)^2 = 1 + 2^-29 + 2^-60, exactly representable as a pair.
        let x = DoubleDouble::from_f64(1.0 + 2f64.powi(-30));
        let sq = x * x;
        assert_eq!(sq.hi, 1.0 + 2f64.powi(-29));
        assert_eq!(sq.lo, 2f64.powi(-60));
    }

    #[test]
    fn division_and_sqrt_roundtrip() {
        let a = DoubleDouble::new(2.0, 0.0);
        let r = a.sqrt();
        let back = r * r - a;
        assert!(back.to_f64().abs() < 1e-30, "{back:?}");
        let third = DoubleDouble::ONE / DoubleDouble::from_f64(3.0);
        let err = third * DoubleDouble::from_f64(3.0) - DoubleDouble::ONE;
        assert!(err.to_f64().abs() < 1e-31);
        assert!(renormalized(third));
    }

    #[test]
    fn overflow_flags_non_finite() {
        let big = DoubleDouble::from_f64(f64::MAX);
        let s = big * DoubleDouble::from_f64(4.0);
        assert!(!s.is_finite());
        assert_eq!(s.lo, 0.0);
        let t = big + big;
        assert!(!t.is_finite());
    }
}
