//! Scalar abstraction shared by every physics routine.
//!
//! All floating-point code is written against [`Real`], so the same formulas
//! run in `f64` (the default used by the CLI) or `f32`. Angular-momentum
//! factors are evaluated exactly as [`Rational`] first and converted last.

use std::fmt::{Debug, Display, LowerExp};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Exact rational on doubled quantum numbers.
pub type Rational = num_rational::Ratio<i64>;

/// Floating-point scalar usable by the physics modules.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + LowerExp
    + Default
    + Send
    + Sync
    + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Converts an `f64` literal or constant into `T`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 literal representable in target float")
}

/// Converts an `i64` into `T`.
#[inline]
pub fn from_int<T: Real>(x: i64) -> T {
    T::from_i64(x).expect("integer representable in target float")
}

/// Rounds an exact rational to `T` by dividing numerator and denominator.
#[inline]
pub fn ratio_to<T: Real>(r: Rational) -> T {
    from_int::<T>(*r.numer()) / from_int::<T>(*r.denom())
}

/// Relative difference `|a - b| / max(|a|, |b|)`, zero when both are zero.
pub fn rel_diff<T: Real>(a: T, b: T) -> T {
    let scale = a.abs().max(b.abs());
    if scale == T::zero() {
        T::zero()
    } else {
        (a - b).abs() / scale
    }
}
