//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating-point scalar: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    /// Conversion from a count.
    fn count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// `2π`.
    fn two_pi() -> Self {
        Self::TAU()
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Converts an ordinary frequency in Hz to angular frequency.
pub fn hz_to_angular<T: Real>(hz: T) -> T {
    hz * T::two_pi()
}

/// Converts an angular frequency back to Hz.
pub fn angular_to_hz<T: Real>(omega: T) -> T {
    omega / T::two_pi()
}

/// Wraps an angle to `(-π, π]`.
pub fn wrap_angle<T: Real>(a: T) -> T {
    let two_pi = T::two_pi();
    let mut x = a % two_pi;
    if x <= -T::PI() {
        x = x + two_pi;
    } else if x > T::PI() {
        x = x - two_pi;
    }
    x
}

/// Returns `next` shifted by a multiple of 2π so that it lies within π of `prev`.
pub fn unwrap_towards<T: Real>(prev: T, next: T) -> T {
    prev + wrap_angle(next - prev)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_is_half_open() {
        let pi = std::f64::consts::PI;
        assert_eq!(wrap_angle(pi), pi);
        assert!((wrap_angle(-pi) - pi).abs() < 1e-15);
        assert!((wrap_angle(3.0 * pi + 0.1) - (-pi + 0.1)).abs() < 1e-12);
    }

    #[test]
    fn unwrap_follows_nearest_branch() {
        let pi = std::f64::consts::PI;
        let a = unwrap_towards(pi - 0.1, -pi + 0.1);
        assert!((a - (pi + 0.1)).abs() < 1e-12);
        assert!((unwrap_towards(10.0, 10.5f64) - 10.5).abs() < 1e-12);
    }

    #[test]
    fn hz_conversion_roundtrip() {
        let w = hz_to_angular(1000.0f32);
        assert!((angular_to_hz(w) - 1000.0).abs() < 1e-3);
    }
}
