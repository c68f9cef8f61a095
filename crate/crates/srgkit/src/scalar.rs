//! Scalar abstraction for the rational-function layer.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, NumAssign};

/// Real floating-point type usable as a polynomial coefficient.
pub trait Scalar:
    Float + FloatConst + NumAssign + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` constant into this type.
    fn of(x: f64) -> Self {
        <Self as num_traits::NumCast>::from(x).expect("f64 constant representable")
    }

    /// Lossless-enough widening used when handing values to the f64 geometry layer.
    fn to_f64_lossy(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }

    /// A tolerance floor tied to the type's precision: `max(tol, 64 eps)`.
    fn floor_tol(tol: f64) -> Self {
        let eps = Self::epsilon() * Self::of(64.0);
        let t = Self::of(tol);
        if t > eps {
            t
        } else {
            eps
        }
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
