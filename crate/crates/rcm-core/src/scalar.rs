use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

/// Floating-point scalar for the grid/transform layer: f32 or f64.
pub trait Scalar:
    num_traits::Float
    + num_traits::FloatConst
    + num_traits::FromPrimitive
    + rustfft::FftNum
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Display
    + Debug
{
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal not representable")
    }

    fn to_f64(self) -> f64 {
        num_traits::NumCast::from(self).expect("scalar not representable as f64")
    }

    fn from_usize_(n: usize) -> Self {
        Self::from_usize(n).expect("usize not representable")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
