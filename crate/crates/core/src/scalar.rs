//! Scalar abstraction shared by every geometric type in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating point scalar the geometry is generic over (`f32` or `f64`).
///
/// The tolerances scale with the precision of the type: the `f64` values are
/// the ones the rest of the documentation quotes.
pub trait Real:
    Float + FloatConst + FromPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Tolerance for point/tangent/frame invariant checks.
    fn invariant_tol() -> Self;
    /// Slack accepted on numerically off-sheet inputs before they are rejected.
    fn clamp_tol() -> Self;
    /// Tolerance for `MᵀJM = J` on isometries.
    fn isometry_tol() -> Self;

    /// Converts an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn two() -> Self {
        Self::one() + Self::one()
    }

    #[inline]
    fn half() -> Self {
        Self::lit(0.5)
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f64 {
    fn invariant_tol() -> Self {
        1e-9
    }
    fn clamp_tol() -> Self {
        1e-7
    }
    fn isometry_tol() -> Self {
        1e-8
    }
}

impl Real for f32 {
    fn invariant_tol() -> Self {
        2e-4
    }
    fn clamp_tol() -> Self {
        1e-3
    }
    fn isometry_tol() -> Self {
        1e-3
    }
}

/// `acosh` clamped at 1 so that rounding just below the sheet does not yield NaN.
#[inline]
pub fn acosh_clamped<T: Real>(x: T) -> T {
    if x <= T::one() {
        T::zero()
    } else {
        x.acosh()
    }
}
