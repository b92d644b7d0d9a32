use num_traits::Float;

/// Scalar type the networks run on. Training defaults to `f32`; gradient
/// verification uses `f64` so finite-difference checks stay meaningful.
pub trait Scalar:
    Float + std::fmt::Debug + std::fmt::Display + Send + Sync + 'static
{
    const BITS: u32;

    fn from_f64(x: f64) -> Self;
    fn to_f64_s(self) -> f64;
    /// Raw f32 value used by the checkpoint wire format.
    fn to_f32_s(self) -> f32;
    fn from_f32(x: f32) -> Self;
}

impl Scalar for f32 {
    const BITS: u32 = 32;

    #[inline(always)]
    fn from_f64(x: f64) -> Self {
        x as f32
    }
    #[inline(always)]
    fn to_f64_s(self) -> f64 {
        self as f64
    }
    #[inline(always)]
    fn to_f32_s(self) -> f32 {
        self
    }
    #[inline(always)]
    fn from_f32(x: f32) -> Self {
        x
    }
}

impl Scalar for f64 {
    const BITS: u32 = 64;

    #[inline(always)]
    fn from_f64(x: f64) -> Self {
        x
    }
    #[inline(always)]
    fn to_f64_s(self) -> f64 {
        self
    }
    #[inline(always)]
    fn to_f32_s(self) -> f32 {
        self as f32
    }
    #[inline(always)]
    fn from_f32(x: f32) -> Self {
        x as f64
    }
}

/// Shorthand conversion for literals inside generic numeric code.
#[inline(always)]
pub fn s<T: Scalar>(x: f64) -> T {
    T::from_f64(x)
}
