//! Scalar abstraction for the numeric kernels.
//!
//! Every algorithm in this crate is generic over [`Scalar`], which is any
//! IEEE-style float the `num-traits` hierarchy knows about. `f64` is the
//! working type; `f32` instantiations compile and run at reduced accuracy.

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point scalar usable by the solvers.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + std::iter::Sum
    + std::fmt::Debug
    + std::fmt::Display
    + Send
    + Sync
    + 'static
{
    /// Shorthand conversion from an `f64` literal.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("literal not representable in this scalar type")
    }

    /// Lossy view as `f64`, used for diagnostics and sampling.
    fn lossy_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Scalar for T where
    T: Float
        + FromPrimitive
        + ToPrimitive
        + std::iter::Sum
        + std::fmt::Debug
        + std::fmt::Display
        + Send
        + Sync
        + 'static
{
}
