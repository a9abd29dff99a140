//! Floating-point scalar abstraction for the numeric kernels.
//!
//! Everything numeric in this crate is generic over [`Scalar`] so the same
//! kernels run in f32 and f64. The crate root pins [`crate::Real`] = f64 for
//! file formats and gradient checks, where f32 round-off would dominate the
//! verification tolerances.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Floating-point scalar usable by every kernel in this crate.
///
/// The supertraits cover arithmetic (`Float`), conversions from literals and
/// counts (`FromPrimitive` / `ToPrimitive`), and the summation used all over
/// the linear algebra helpers.
pub trait Scalar:
    num_traits::Float
    + num_traits::FromPrimitive
    + num_traits::ToPrimitive
    + std::iter::Sum
    + std::fmt::Debug
    + std::fmt::Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Draw a standard normal sample of this scalar type.
    fn sample_standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Lossy conversion from f64; panics only for types that cannot represent
    /// ordinary finite values, which none of the implementors do.
    fn of_f64(value: f64) -> Self {
        <Self as num_traits::FromPrimitive>::from_f64(value)
            .expect("finite f64 must convert to a Scalar")
    }

    /// Conversion from a count; exact for every usize that fits the mantissa,
    /// which desk-scale sizes always do.
    fn of_usize(value: usize) -> Self {
        <Self as num_traits::FromPrimitive>::from_usize(value)
            .expect("usize must convert to a Scalar")
    }

    /// Widen to f64 (used by samplers and printed reports).
    fn to_f64_lossy(self) -> f64 {
        <Self as num_traits::ToPrimitive>::to_f64(&self).expect("Scalar must widen to f64")
    }
}

impl Scalar for f32 {
    fn sample_standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }
}

impl Scalar for f64 {
    fn sample_standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }
}
