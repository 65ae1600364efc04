//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display, LowerExp};

use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating point type the geometry is evaluated in: `f32` or `f64`.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + Debug
    + Display
    + LowerExp
    + Default
    + serde::Serialize
    + Send
    + Sync
    + 'static
{
    /// Default absolute tolerance for adaptive quadrature.
    const QUAD_TOL: f64;
    /// Relative tolerance used when an integral must be smooth in its endpoints.
    const QUAD_RTOL: f64;

    /// Converts an `f64` literal. Never fails for finite input.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    /// Smallest radius the solvers will probe when a domain reaches the origin.
    ///
    /// Chosen as the cube root of the smallest normal number so that `u^2 r`,
    /// `u^4 r^2` and friends stay representable for cylindrical ends.
    #[inline]
    fn radius_floor() -> Self {
        Self::min_positive_value().cbrt()
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {
    const QUAD_TOL: f64 = 1e-5;
    const QUAD_RTOL: f64 = 1e-6;
}

impl Scalar for f64 {
    const QUAD_TOL: f64 = 1e-10;
    const QUAD_RTOL: f64 = 1e-13;
}

/// `coth(x)` for `x > 0`, accurate near the origin.
#[inline]
pub fn coth<T: Scalar>(x: T) -> T {
    T::one() / x.tanh()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floors_are_representable() {
        assert!(f64::radius_floor() > 0.0 && f64::radius_floor() < 1e-100);
        assert!(f32::radius_floor() > 0.0 && f32::radius_floor() < 1e-10);
        let r = f64::radius_floor();
        // cylinder-like factor u = r^{-1/2}: u^4 r^2 = 1 must not overflow
        let u = r.powf(-0.5);
        assert!((u * u * r).is_finite());
    }

    #[test]
    fn coth_matches_definition() {
        let x = 2.0_f64;
        let expected = x.cosh() / x.sinh();
        assert!((coth(x) - expected).abs() < 1e-15);
    }
}
