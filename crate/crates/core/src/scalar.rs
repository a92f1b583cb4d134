use std::fmt::{Debug, Display, LowerExp};

use nalgebra::RealField;
use num_traits::ToPrimitive;

/// Real scalar the numerical code is generic over.
///
/// Implemented for `f32` and `f64`. Tolerances are written as `f64`
/// literals and converted with [`Real::lit`]; they are tuned for `f64`.
pub trait Real:
    RealField + Copy + ToPrimitive + Display + LowerExp + Debug + Default + Send + Sync + 'static
{
    fn lit(x: f64) -> Self;
    fn infinity() -> Self;
    /// Parse with this type's own precision.
    fn parse_lit(s: &str) -> Option<Self>;

    fn count(n: usize) -> Self {
        Self::lit(n as f64)
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

macro_rules! impl_real {
    ($($t:ty),*) => {$(
        impl Real for $t {
            #[inline]
            fn lit(x: f64) -> Self {
                x as $t
            }
            #[inline]
            fn infinity() -> Self {
                <$t>::INFINITY
            }
            fn parse_lit(s: &str) -> Option<Self> {
                s.trim().parse::<$t>().ok()
            }
        }
    )*};
}

impl_real!(f32, f64);
