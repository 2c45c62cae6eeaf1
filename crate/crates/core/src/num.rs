//! Scalar abstraction for the numeric kernels: f32 or f64.

use std::fmt;
use std::iter::Sum;
use std::ops::AddAssign;

use num_traits::{Float, FromPrimitive};

/// Floating-point scalar accepted by the statistical kernels.
pub trait Real:
    Float + FromPrimitive + AddAssign + Sum<Self> + fmt::Debug + fmt::Display + Send + Sync + 'static
{
    /// Cast a count or index; counts in this crate always fit the mantissa.
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("count representable as scalar")
    }

    /// Cast an `f64` constant.
    fn of_f64(x: f64) -> Self {
        Self::from_f64(x).expect("constant representable as scalar")
    }
}

impl Real for f32 {}
impl Real for f64 {}
