//! Scalar abstraction: the geometry and sampling core is generic over the
//! floating point type through this trait. `f64` is what every shipped entry
//! point uses; `f32` builds and is covered by a smoke test.

use rand::distributions::uniform::SampleUniform;

/// Floating point scalar for geometry, statistics and chain arithmetic.
pub trait Real:
    num_traits::Float
    + num_traits::FloatConst
    + num_traits::FromPrimitive
    + SampleUniform
    + std::fmt::Display
    + std::fmt::LowerExp
    + std::fmt::Debug
    + std::ops::AddAssign
    + std::ops::SubAssign
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64`, for literals and tolerances.
    fn of(x: f64) -> Self;
    /// Lossy conversion to `f64`, for reporting and integer-valued math.
    fn f64(self) -> f64;
    /// Parse from the plain-text state format.
    fn parse(s: &str) -> Option<Self>;
}

macro_rules! impl_real {
    ($t:ty) => {
        impl Real for $t {
            #[inline]
            fn of(x: f64) -> Self {
                x as $t
            }
            #[inline]
            fn f64(self) -> f64 {
                self as f64
            }
            fn parse(s: &str) -> Option<Self> {
                s.parse().ok()
            }
        }
    };
}

impl_real!(f32);
impl_real!(f64);
