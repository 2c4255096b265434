//! Scalar abstraction shared by the exact two-qubit algebra and the cycle
//! scenario. Everything downstream of the detectors (counts, files) is `f64`.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive};

/// Real floating-point scalar: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Tolerance for Hermiticity, trace and closed-form identity checks.
    fn tolerance() -> Self;

    /// Smallest eigenvalue still accepted as positive semidefinite.
    fn psd_tolerance() -> Self;

    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }
}

impl Real for f64 {
    fn tolerance() -> Self {
        1e-12
    }

    fn psd_tolerance() -> Self {
        1e-10
    }
}

impl Real for f32 {
    fn tolerance() -> Self {
        1e-5
    }

    fn psd_tolerance() -> Self {
        1e-5
    }
}

/// sin(x)/x with the removable singularity filled in.
pub fn sinc<T: Real>(x: T) -> T {
    if x.abs() < T::epsilon() {
        T::one()
    } else {
        x.sin() / x
    }
}

/// Wraps an angle into (−π, π].
pub fn wrap_angle<T: Real>(x: T) -> T {
    let two_pi = T::TAU();
    let mut y = (x + T::PI()) % two_pi;
    if y <= T::zero() {
        y = y + two_pi;
    }
    y - T::PI()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn sinc_at_zero_is_one() {
        assert_eq!(sinc(0.0f64), 1.0);
        assert!((sinc(PI)).abs() < 1e-15);
    }

    #[test]
    fn wrap_interval() {
        assert!((wrap_angle(PI) - PI).abs() < 1e-15);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-15);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-14);
        assert!((wrap_angle(0.25f64) - 0.25).abs() < 1e-15);
        assert!((wrap_angle(-7.0f64) - (-7.0 + 2.0 * PI)).abs() < 1e-14);
    }
}
