//! Scalar abstraction: every numerical routine in this crate is generic over
//! a floating-point type implementing [`Float`].

/// Floating-point scalar used throughout the crate (`f32` or `f64`).
///
/// Bundles the `num-traits` capabilities the numerics need plus the marker
/// bounds required by `ndarray` containers and error formatting.
pub trait Float:
    num_traits::Float
    + num_traits::FloatConst
    + num_traits::NumAssign
    + num_traits::FromPrimitive
    + num_traits::ToPrimitive
    + std::fmt::Debug
    + std::fmt::Display
    + std::iter::Sum
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal into this scalar type.
    ///
    /// Panics only if the conversion is unrepresentable, which cannot happen
    /// for the finite literals used in this crate.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 literal must convert")
    }

    /// Lossy view of this scalar as `f64`, used for diagnostics.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Converts a `usize` (grid sizes, counters) into this scalar type.
    #[inline]
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("usize must convert to scalar")
    }
}

impl Float for f32 {}
impl Float for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literal_conversion_round_trips() {
        assert_eq!(f64::of(2.5), 2.5);
        assert_eq!(f32::of(2.5), 2.5f32);
        assert_eq!(f64::of_usize(2048), 2048.0);
    }
}
