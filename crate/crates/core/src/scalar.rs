use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point type the logic blocks and networks are generic over.
///
/// `Display` and `FromStr` are required because persisted weights are
/// written as shortest round-trip decimal strings.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Default + Debug + Display + FromStr + Send + Sync + 'static
{
    /// Converts an `f64` literal. Panics only for types that cannot
    /// represent finite `f64` values at all, which no implementor does.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("scalar conversion from f64")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar conversion to f64")
    }

    /// Clamp into the unit interval.
    #[inline]
    fn unit_clamp(self) -> Self {
        self.max(Self::zero()).min(Self::one())
    }

    /// Sign with `sgn(0) = 0`, unlike `Float::signum`.
    #[inline]
    fn sgn(self) -> Self {
        if self > Self::zero() {
            Self::one()
        } else if self < Self::zero() {
            -Self::one()
        } else {
            Self::zero()
        }
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
