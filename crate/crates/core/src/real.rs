//! Scalar abstraction for the numeric kernels.

use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating-point scalar the math kernels are generic over: `f32` or `f64`.
///
/// All the analytic machinery (special functions, quadrature, STP
/// evaluators, the placement optimizer) is written against this trait so
/// it can run in either precision. The crate root exposes `f64` aliases
/// for the common instantiations; the network simulator is `f64`-only.
pub trait Real:
    Float + FloatConst + FromPrimitive + core::fmt::Debug + core::fmt::Display + Send + Sync + 'static
{
    /// Converts an `f64` constant into `Self`.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 constant")
    }

    /// Converts a `usize` into `Self`.
    #[inline]
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable as float")
    }

    /// Widens to `f64` (exact for both supported types).
    fn as_f64(self) -> f64;
}

impl Real for f32 {
    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    #[inline]
    fn as_f64(self) -> f64 {
        self
    }
}
