//! Scalar abstraction for the numeric kernels.
//!
//! Step hazards, the truncated samplers, the Poisson regression kernel and
//! the small dense solvers are written once over [`Real`] and instantiated for
//! `f32` and `f64`. Event times and sufficient statistics stay in `f64`.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar usable by the generic kernels.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from `f64`, used for literals and uniform draws.
    #[inline]
    fn of(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("f64 is representable")
    }

    /// Lossy conversion to `f64`.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite float converts to f64")
    }

    #[inline]
    fn of_usize(n: usize) -> Self {
        Self::of(n as f64)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `expm1(x) / x`, continuous at zero.
pub fn expm1_over_x<F: Real>(x: F) -> F {
    if x.abs() < F::epsilon() {
        F::one() + x / F::of(2.0)
    } else {
        x.exp_m1() / x
    }
}
