use std::fmt;
use std::iter::Sum;

use num_traits::{Float, FromPrimitive};

/// Floating-point scalar the whole pipeline is generic over.
///
/// `f64` is the default everywhere and the only type exercised by the
/// acceptance suite; `f32` works but cannot meet the tighter tolerances.
pub trait Scalar:
    Float + FromPrimitive + Sum + fmt::Debug + fmt::Display + fmt::LowerExp + Send + Sync + 'static
{
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Converts an `f64` constant into the working scalar type.
pub(crate) fn real<F: Scalar>(x: f64) -> F {
    F::from_f64(x).expect("f64 constant representable in scalar type")
}
