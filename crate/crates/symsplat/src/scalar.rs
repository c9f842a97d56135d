//! Scalar abstraction: the geometry core is generic over the floating
//! point type, concrete aliases live at the crate root.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, MulAssign, SubAssign};

use num_traits::{Float, ToPrimitive};

/// Floating point scalar: f32 or f64.
pub trait Real:
    Float
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    fn from_f64(v: f64) -> Self {
        num_traits::cast(v).unwrap()
    }

    fn from_f32(v: f32) -> Self {
        num_traits::cast(v).unwrap()
    }

    fn from_usize(v: usize) -> Option<Self> {
        num_traits::cast(v)
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap()
    }

    fn as_f32(self) -> f32 {
        self.to_f32().unwrap()
    }

    fn pi() -> Self {
        Self::from_f64(std::f64::consts::PI)
    }

    fn two_pi() -> Self {
        Self::from_f64(std::f64::consts::TAU)
    }

    fn half() -> Self {
        Self::from_f64(0.5)
    }

    fn two() -> Self {
        Self::from_f64(2.0)
    }
}

impl Real for f32 {}
impl Real for f64 {}
