//! Scalar abstractions shared by the generic kernels.

use std::fmt::Debug;
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, Num, Signed, ToPrimitive};

/// Field-like scalar: enough for averages, sums and comparisons.
///
/// Implemented for `f32`, `f64` and exact rationals such as `Ratio<i64>`.
pub trait Scalar:
    Num + Signed + PartialOrd + Copy + FromPrimitive + ToPrimitive + Debug + Send + Sync + 'static
{
    /// Exact `2^k`.
    fn pow2(k: i32) -> Self {
        let two = Self::one() + Self::one();
        let mut acc = Self::one();
        for _ in 0..k.unsigned_abs() {
            acc = acc * two;
        }
        if k < 0 {
            Self::one() / acc
        } else {
            acc
        }
    }

    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar")
    }

    fn of_f64(x: f64) -> Self {
        Self::from_f64(x).expect("value representable in scalar")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    fn min_of(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }
}

impl<T> Scalar for T where
    T: Num
        + Signed
        + PartialOrd
        + Copy
        + FromPrimitive
        + ToPrimitive
        + Debug
        + Send
        + Sync
        + 'static
{
}

/// Floating-point scalar, needed wherever square roots or logarithms appear.
pub trait Real: Scalar + Float + Sum {}

impl<T> Real for T where T: Scalar + Float + Sum {}
