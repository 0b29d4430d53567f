//! Floating-point score type abstraction.

use std::cmp::Ordering;
use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive};

/// Scalar type scores and entropies are computed in.
///
/// Implemented for `f32` and `f64`. Scores are never NaN, so [`Real::cmp_total`]
/// is a total order on every value the engine produces.
pub trait Real: Float + FromPrimitive + Sum + Debug + Display + Send + Sync + 'static {
    #[inline]
    fn of_f64(v: f64) -> Self {
        Self::from_f64(v).expect("f64 converts to every Real")
    }

    #[inline]
    fn of_usize(v: usize) -> Self {
        Self::from_usize(v).expect("usize converts to every Real")
    }

    #[inline]
    fn cmp_total(&self, other: &Self) -> Ordering {
        self.partial_cmp(other).unwrap_or(Ordering::Equal)
    }
}

impl Real for f32 {}
impl Real for f64 {}
