//! Floating-point abstraction shared by every numeric module.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Real scalar used for affect scores, feature vectors and distances.
///
/// Implemented for `f32` and `f64`. The crate root re-exports `f64`
/// instantiations of the main types.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Converts an `f64` literal. Every literal used in this crate is
    /// representable (possibly rounded) in both `f32` and `f64`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 literal converts to scalar")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Clamps to `[lo, hi]`; NaN passes through unchanged.
    #[inline]
    fn clamp_to(self, lo: Self, hi: Self) -> Self {
        if self < lo {
            lo
        } else if self > hi {
            hi
        } else {
            self
        }
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Arithmetic mean, `None` for an empty iterator.
pub fn mean<T: Scalar, I: IntoIterator<Item = T>>(values: I) -> Option<T> {
    let mut sum = T::zero();
    let mut n = 0usize;
    for v in values {
        sum = sum + v;
        n += 1;
    }
    if n == 0 {
        None
    } else {
        Some(sum / T::from_usize(n)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_of_nothing_is_none() {
        assert_eq!(mean::<f64, _>(Vec::new()), None);
        assert_eq!(mean([1.0f32, 2.0, 6.0]), Some(3.0));
    }

    #[test]
    fn clamp_keeps_interior_values() {
        assert_eq!(5.0f64.clamp_to(0.0, 10.0), 5.0);
        assert_eq!((-1.0f64).clamp_to(0.0, 10.0), 0.0);
        assert_eq!(11.0f32.clamp_to(0.0, 10.0), 10.0);
    }
}
