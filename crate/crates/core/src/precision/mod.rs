//! Two-tier scalar arithmetic.
//!
//! Every numerical kernel in the crate is generic over [`Scalar`]. The
//! factorization, preconditioner and Krylov solvers are further generic over
//! a [`PrecisionPair`], which names a lower-precision type (used for the
//! factorization of the moderate part) and a higher-precision type (used for
//! residuals, the Schur complement and the final solution).
//!
//! Two mixed pairs are provided, [`SingleDouble`] and [`DoubleQuad`], plus
//! [`Pure`] for baseline runs in a single kind.

mod dd;

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::marker::PhantomData;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

pub use dd::{fast_two_sum, two_prod, two_sum, DoubleDouble};

use crate::error::{Error, Result};

/// The three floating-point kinds the crate knows about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScalarKind {
    Single,
    Double,
    DoubleDouble,
}

impl ScalarKind {
    /// Machine epsilon: distance from 1 to the next representable value.
    pub const fn eps(self) -> f64 {
        match self {
            ScalarKind::Single => f32::EPSILON as f64,
            ScalarKind::Double => f64::EPSILON,
            ScalarKind::DoubleDouble => DoubleDouble::EPSILON,
        }
    }

    /// Decimal digits carried by the significand.
    pub const fn digits(self) -> u32 {
        match self {
            ScalarKind::Single => 7,
            ScalarKind::Double => 15,
            ScalarKind::DoubleDouble => 31,
        }
    }

    pub const fn name(self) -> &'static str {
        match self {
            ScalarKind::Single => "single",
            ScalarKind::Double => "double",
            ScalarKind::DoubleDouble => "quadruple",
        }
    }
}

/// Runtime description of a lower/higher combination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairKind {
    pub lower: ScalarKind,
    pub higher: ScalarKind,
}

impl PairKind {
    /// Only `(Single, Double)` and `(Double, DoubleDouble)` are mixed pairs.
    pub fn new(lower: ScalarKind, higher: ScalarKind) -> Result<Self> {
        match (lower, higher) {
            (ScalarKind::Single, ScalarKind::Double)
            | (ScalarKind::Double, ScalarKind::DoubleDouble) => Ok(Self { lower, higher }),
            _ => Err(Error::Config(format!(
                "unsupported precision pair ({lower:?}, {higher:?})"
            ))),
        }
    }

    pub fn is_mixed(self) -> bool {
        self.lower != self.higher
    }

    pub fn label(self) -> String {
        if self.is_mixed() {
            format!("mixed({}+{})", self.higher.name(), self.lower.name())
        } else {
            self.higher.name().to_string()
        }
    }
}

/// Real scalar usable in every kernel of the crate.
pub trait Scalar:
    Copy
    + Send
    + Sync
    + Default
    + PartialEq
    + PartialOrd
    + Debug
    + Display
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + 'static
{
    const KIND: ScalarKind;

    fn zero() -> Self;
    fn one() -> Self;
    /// Rounds an `f64` into this kind (exact for `f64` and double-double).
    fn from_f64(x: f64) -> Self;
    /// Nearest `f64`.
    fn to_f64(self) -> f64;
    fn abs(self) -> Self;
    fn sqrt(self) -> Self;
    fn is_finite(self) -> bool;
    fn to_dd(self) -> DoubleDouble;
    fn from_dd(x: DoubleDouble) -> Self;

    fn eps() -> f64 {
        Self::KIND.eps()
    }

    /// `self * a + b`; fused where the kind supports it.
    #[inline]
    fn mul_add(self, a: Self, b: Self) -> Self {
        self * a + b
    }
}

impl Scalar for f32 {
    const KIND: ScalarKind = ScalarKind::Single;
    #[inline]
    fn zero() -> Self {
        0.0
    }
    #[inline]
    fn one() -> Self {
        1.0
    }
    #[inline]
    fn from_f64(x: f64) -> Self {
        x as f32
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self as f64
    }
    #[inline]
    fn abs(self) -> Self {
        f32::abs(self)
    }
    #[inline]
    fn sqrt(self) -> Self {
        f32::sqrt(self)
    }
    #[inline]
    fn is_finite(self) -> bool {
        f32::is_finite(self)
    }
    #[inline]
    fn to_dd(self) -> DoubleDouble {
        DoubleDouble::from_f64(self as f64)
    }
    #[inline]
    fn from_dd(x: DoubleDouble) -> Self {
        x.to_f64() as f32
    }
}

impl Scalar for f64 {
    const KIND: ScalarKind = ScalarKind::Double;
    #[inline]
    fn zero() -> Self {
        0.0
    }
    #[inline]
    fn one() -> Self {
        1.0
    }
    #[inline]
    fn from_f64(x: f64) -> Self {
        x
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
    #[inline]
    fn abs(self) -> Self {
        f64::abs(self)
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline]
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
    #[inline]
    fn to_dd(self) -> DoubleDouble {
        DoubleDouble::from_f64(self)
    }
    #[inline]
    fn from_dd(x: DoubleDouble) -> Self {
        x.to_f64()
    }
}

impl Scalar for DoubleDouble {
    const KIND: ScalarKind = ScalarKind::DoubleDouble;
    #[inline]
    fn zero() -> Self {
        DoubleDouble::ZERO
    }
    #[inline]
    fn one() -> Self {
        DoubleDouble::ONE
    }
    #[inline]
    fn from_f64(x: f64) -> Self {
        DoubleDouble::from_f64(x)
    }
    #[inline]
    fn to_f64(self) -> f64 {
        DoubleDouble::to_f64(self)
    }
    #[inline]
    fn abs(self) -> Self {
        DoubleDouble::abs(self)
    }
    #[inline]
    fn sqrt(self) -> Self {
        DoubleDouble::sqrt(self)
    }
    #[inline]
    fn is_finite(self) -> bool {
        DoubleDouble::is_finite(self)
    }
    #[inline]
    fn to_dd(self) -> DoubleDouble {
        self
    }
    #[inline]
    fn from_dd(x: DoubleDouble) -> Self {
        x
    }
}

/// Result of narrowing a higher-precision value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Truncated<L> {
    pub value: L,
    /// Set when the input exceeded the lower kind's range and was clamped.
    pub saturated: bool,
}

/// A lower/higher precision combination, fixed at compile time.
pub trait PrecisionPair: Send + Sync + 'static {
    type Lower: Scalar;
    type Higher: Scalar;

    /// Round-to-nearest narrowing; out-of-range magnitudes saturate to the
    /// largest finite lower value and report it.
    fn truncate(x: Self::Higher) -> Truncated<Self::Lower>;

    /// Exact widening.
    fn lift(x: Self::Lower) -> Self::Higher;

    fn kind() -> PairKind {
        PairKind {
            lower: <Self::Lower as Scalar>::KIND,
            higher: <Self::Higher as Scalar>::KIND,
        }
    }

    /// True when the lower and higher types coincide.
    fn is_pure() -> bool {
        <Self::Lower as Scalar>::KIND == <Self::Higher as Scalar>::KIND
    }
}

/// (single, double).
#[derive(Debug, Clone, Copy, Default)]
pub struct SingleDouble;

/// (double, double-double).
#[derive(Debug, Clone, Copy, Default)]
pub struct DoubleQuad;

/// Both tiers in the same kind; used for the pure-precision baselines.
#[derive(Debug, Clone, Copy, Default)]
pub struct Pure<T>(PhantomData<T>);

impl PrecisionPair for SingleDouble {
    type Lower = f32;
    type Higher = f64;

    #[inline]
    fn truncate(x: f64) -> Truncated<f32> {
        let v = x as f32;
        if v.is_infinite() && x.is_finite() {
            Truncated { value: f32::MAX.copysign(v), saturated: true }
        } else {
            Truncated { value: v, saturated: false }
        }
    }

    #[inline]
    fn lift(x: f32) -> f64 {
        x as f64
    }
}

impl PrecisionPair for DoubleQuad {
    type Lower = f64;
    type Higher = DoubleDouble;

    #[inline]
    fn truncate(x: DoubleDouble) -> Truncated<f64> {
        let v = x.to_f64();
        if v.is_infinite() && x.hi.is_finite() {
            Truncated { value: f64::MAX.copysign(v), saturated: true }
        } else {
            Truncated { value: v, saturated: false }
        }
    }

    #[inline]
    fn lift(x: f64) -> DoubleDouble {
        DoubleDouble::from_f64(x)
    }
}

impl<T: Scalar> PrecisionPair for Pure<T> {
    type Lower = T;
    type Higher = T;

    #[inline]
    fn truncate(x: T) -> Truncated<T> {
        Truncated { value: x, saturated: false }
    }

    #[inline]
    fn lift(x: T) -> T {
        x
    }
}

/// Narrows `src` into `dst`, returning how many entries saturated.
pub fn truncate_into<P: PrecisionPair>(src: &[P::Higher], dst: &mut [P::Lower]) -> usize {
    debug_assert_eq!(src.len(), dst.len());
    let mut saturated = 0;
    for (d, &s) in dst.iter_mut().zip(src) {
        let t = P::truncate(s);
        saturated += t.saturated as usize;
        *d = t.value;
    }
    saturated
}

/// Converts between any two scalar kinds through double-double, which holds
/// every supported kind exactly.
#[inline]
pub fn convert<A: Scalar, B: Scalar>(x: A) -> B {
    B::from_dd(x.to_dd())
}
