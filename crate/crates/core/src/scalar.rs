//! Scalar abstraction for the numeric core.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Floating-point scalar the dense math is generic over.
///
/// Implemented by `f32` and `f64`. `RealField` supplies the field operations
/// and elementary functions used by the linear algebra; the `num-traits`
/// bounds give lossless-enough conversion to and from `f64`, which is the
/// interchange type for reports and noise calibration.
pub trait Real:
    RealField + FromPrimitive + ToPrimitive + Copy + Default + Send + Sync + 'static
{
}

impl<T> Real for T where
    T: RealField + FromPrimitive + ToPrimitive + Copy + Default + Send + Sync + 'static
{
}

/// Converts an `f64` into the working scalar.
///
/// For `f32` this rounds; both target types represent every finite `f64`
/// (possibly as an infinity for out-of-range `f32`), so the conversion
/// itself cannot fail on finite input.
#[inline]
pub fn real<F: Real>(x: f64) -> F {
    F::from_f64(x).expect("f64 converts into any Real scalar")
}

/// Converts the working scalar back to `f64` for reporting.
#[inline]
pub fn to_f64<F: Real>(x: F) -> f64 {
    x.to_f64().expect("Real scalar converts to f64")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrips_f64() {
        let x: f64 = real(0.15625);
        assert_eq!(x, 0.15625);
        assert_eq!(to_f64(x), 0.15625);
    }

    #[test]
    fn narrows_to_f32() {
        let x: f32 = real(1.0e-3);
        assert!((to_f64(x) - 1.0e-3).abs() < 1.0e-9);
    }
}
