//! Numeric abstraction shared by every solver component.
//!
//! All algorithms are written against [`Scalar`] so they run unchanged on
//! `f64`, `f32`, or exact rationals. Floating types compare with a small
//! absolute tolerance; rationals compare exactly.

use std::cmp::Ordering;
use std::fmt::{Debug, Display};

use num_rational::Ratio;
use num_traits::{FromPrimitive, Num, NumAssign, ToPrimitive};

pub trait Scalar:
    Num + NumAssign + Copy + PartialOrd + Debug + Display + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    /// Absolute slack allowed when checking inequalities.
    fn tolerance() -> Self;

    fn ceil(self) -> Self;

    fn floor(self) -> Self;

    /// Lossy conversion used for coordinates and reporting.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("value representable in scalar type")
    }

    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn two() -> Self {
        Self::one() + Self::one()
    }

    fn half(self) -> Self {
        self / Self::two()
    }

    fn abs(self) -> Self {
        if self < Self::zero() {
            Self::zero() - self
        } else {
            self
        }
    }

    /// `self <= other` up to [`Scalar::tolerance`].
    fn le_tol(self, other: Self) -> bool {
        self <= other + Self::tolerance()
    }

    fn is_integral(self) -> bool {
        self.floor() == self
    }
}

impl Scalar for f64 {
    fn tolerance() -> Self {
        1e-9
    }
    fn ceil(self) -> Self {
        f64::ceil(self)
    }
    fn floor(self) -> Self {
        f64::floor(self)
    }
}

impl Scalar for f32 {
    fn tolerance() -> Self {
        1e-4
    }
    fn ceil(self) -> Self {
        f32::ceil(self)
    }
    fn floor(self) -> Self {
        f32::floor(self)
    }
}

impl Scalar for Ratio<i64> {
    fn tolerance() -> Self {
        Ratio::from_integer(0)
    }
    fn ceil(self) -> Self {
        Ratio::ceil(&self)
    }
    fn floor(self) -> Self {
        Ratio::floor(&self)
    }
}

/// Total order for heap keys and sorting; incomparable values count as equal.
pub fn cmp<T: Scalar>(a: &T, b: &T) -> Ordering {
    a.partial_cmp(b).unwrap_or(Ordering::Equal)
}

pub fn min<T: Scalar>(a: T, b: T) -> T {
    if b < a {
        b
    } else {
        a
    }
}

pub fn max<T: Scalar>(a: T, b: T) -> T {
    if b > a {
        b
    } else {
        a
    }
}

/// Heap/sort key wrapper with a total order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Key<T>(pub T);

impl<T: Scalar> Eq for Key<T> {}

impl<T: Scalar> PartialOrd for Key<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Scalar> Ord for Key<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        cmp(&self.0, &other.0)
    }
}
