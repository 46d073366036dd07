//! Floating point abstraction shared by every numeric routine in the crate.
//!
//! All estimators, corrections and classifiers are written against
//! [`Scalar`], with implementations for `f32` and `f64`. Routines that need
//! dense linear algebra (eigen-decomposition, Cholesky) additionally require
//! [`LinalgScalar`], which pulls in nalgebra's `RealField`.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` constant into `Self`.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 constant representable in scalar type")
    }

    #[inline]
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Scalars usable with nalgebra's decompositions.
///
/// `Float` and `RealField` both provide `sqrt`, `abs`, ... so code bounded by
/// this trait calls those through `Float::` explicitly.
pub trait LinalgScalar: Scalar + nalgebra::RealField {}

impl<T: Scalar + nalgebra::RealField> LinalgScalar for T {}
