use std::fmt::{Debug, Display, LowerExp};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point type used by every numerical routine in the crate.
///
/// Implemented for `f32` and `f64`. Monte Carlo drivers, estimation and the
/// cross-validation harness work in `f64`; the closed-form analytics, the
/// special functions and the simulator accept either.
pub trait Scalar:
    'static
    + Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Default
    + Send
    + Sync
    + Debug
    + Display
    + LowerExp
{
    /// Converts an `f64` literal. Panics only for types that cannot represent
    /// finite `f64` constants, which no implementor does.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("scalar conversion from f64")
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("scalar conversion from usize")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
