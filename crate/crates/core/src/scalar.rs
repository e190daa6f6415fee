//! Scalar abstraction shared by the numeric kernels.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point type usable by the network, replay and learner code: `f32` or `f64`.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion from `f64`; exact for `f64` itself.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 is representable in every Real")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("Real converts to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Squared euclidean norm.
pub fn norm_sq<T: Real>(xs: &[T]) -> T {
    xs.iter().map(|&x| x * x).sum()
}

pub fn all_finite<T: Real>(xs: &[T]) -> bool {
    xs.iter().all(|x| x.is_finite())
}
