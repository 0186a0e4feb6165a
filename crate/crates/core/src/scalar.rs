//! Floating point abstraction for the belief math.
//!
//! Dynamics, energy accounting and the closed-form predictions are written
//! once against [`Scalar`] and instantiated for `f32` and `f64`. The
//! simulation engine and the scenario records are `f64` only.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive};

/// A real number type usable by the belief math: `f32` or `f64`.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal into this type.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    /// Smallest precision a belief may decay to.
    fn precision_floor() -> Self {
        Self::of(1e-300).max(Self::min_positive_value())
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
