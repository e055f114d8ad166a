//! Scalar abstraction for the numeric kernels.
//!
//! The measure and functional kernels are written against [`Scalar`] so they
//! run at `f32` or `f64`; the solvers instantiate everything at `f64`. Decimal
//! constants enter generic code through [`real`], which converts exactly
//! representable `f64` literals into the working type.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::Float;

/// Floating-point scalar usable by every kernel in this crate.
pub trait Scalar:
    Float
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
}

impl<T> Scalar for T where
    T: Float
        + AddAssign
        + SubAssign
        + MulAssign
        + DivAssign
        + Sum
        + Debug
        + Display
        + Send
        + Sync
        + 'static
{
}

/// Converts an `f64` constant into the working scalar type.
///
/// Panics only if the target type cannot represent ordinary finite constants,
/// which no `Float` implementation of interest does.
#[inline]
pub fn real<F: Scalar>(x: f64) -> F {
    F::from(x).expect("finite f64 constant must convert into the scalar type")
}

/// Converts a `usize` count into the working scalar type.
#[inline]
pub fn real_of<F: Scalar>(n: usize) -> F {
    real(n as f64)
}
