//! Element type abstraction: the whole engine is generic over `f32`/`f64`.
//!
//! 64-bit is the verification precision (finite-difference tolerances are
//! meaningless in 32-bit); 32-bit is the speed mode used for training runs
//! and is the on-disk checkpoint precision.

use num_traits::Float;

/// Floating-point element of every tensor. `Float` supplies the usual math
/// via libm in `no_std`; `erf` is added here for the exact Gaussian-CDF GELU.
pub trait Scalar:
    Float + core::fmt::Debug + core::fmt::Display + Send + Sync + 'static
{
    const BITS: u32;

    fn from_f64(v: f64) -> Self;
    fn as_f64(self) -> f64;
    fn from_usize(v: usize) -> Self;
    fn erf(self) -> Self;
}

impl Scalar for f32 {
    const BITS: u32 = 32;

    #[inline]
    fn from_f64(v: f64) -> Self {
        v as f32
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }

    #[inline]
    fn from_usize(v: usize) -> Self {
        v as f32
    }

    #[inline]
    fn erf(self) -> Self {
        libm::erff(self)
    }
}

impl Scalar for f64 {
    const BITS: u32 = 64;

    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self
    }

    #[inline]
    fn from_usize(v: usize) -> Self {
        v as f64
    }

    #[inline]
    fn erf(self) -> Self {
        libm::erf(self)
    }
}
