//! Scalar floating-point helpers routed through `libm`.
//!
//! Using `libm` unconditionally (rather than `std` under the `std` feature)
//! keeps every result bit-identical between `std` and `no_std` builds, which
//! the deterministic-report contracts downstream rely on.

pub use core::f64::consts::{FRAC_PI_2, PI, TAU};

#[inline]
pub fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[inline]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline]
pub fn tan(x: f64) -> f64 {
    libm::tan(x)
}

#[inline]
pub fn asin(x: f64) -> f64 {
    libm::asin(x)
}

#[inline]
pub fn acos(x: f64) -> f64 {
    libm::acos(x)
}

#[inline]
pub fn atan2(y: f64, x: f64) -> f64 {
    libm::atan2(y, x)
}

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

#[inline]
pub fn powi(x: f64, n: i32) -> f64 {
    libm::pow(x, n as f64)
}

#[inline]
pub fn floor(x: f64) -> f64 {
    libm::floor(x)
}

#[inline]
pub fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}

#[inline]
pub fn round(x: f64) -> f64 {
    libm::round(x)
}

#[inline]
pub fn hypot(x: f64, y: f64) -> f64 {
    libm::hypot(x, y)
}

#[inline]
pub fn cosh(x: f64) -> f64 {
    libm::cosh(x)
}

#[inline]
pub fn sinh(x: f64) -> f64 {
    libm::sinh(x)
}

#[inline]
pub fn tanh(x: f64) -> f64 {
    libm::tanh(x)
}

#[inline]
pub fn copysign(x: f64, y: f64) -> f64 {
    libm::copysign(x, y)
}

#[inline]
pub fn sq(x: f64) -> f64 {
    x * x
}

/// Maximum of two floats, NaN-propagating on the first argument.
#[inline]
pub fn max(a: f64, b: f64) -> f64 {
    if a > b {
        a
    } else {
        b
    }
}

#[inline]
pub fn min(a: f64, b: f64) -> f64 {
    if a < b {
        a
    } else {
        b
    }
}

/// Reduce an angle to its principal value in `(−π, π]`.
pub fn principal(phase: f64) -> f64 {
    let mut p = libm::remainder(phase, TAU);
    if p <= -PI {
        p += TAU;
    } else if p > PI {
        p -= TAU;
    }
    p
}

/// Circular distance between two angles, in `[0, π]`.
pub fn angle_distance(a: f64, b: f64) -> f64 {
    abs(principal(a - b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn principal_wraps_into_half_open_interval() {
        assert!((principal(3.0 * PI) - PI).abs() < 1e-12);
        assert!((principal(-PI) - PI).abs() < 1e-12);
        assert!((principal(0.5) - 0.5).abs() < 1e-15);
        assert!((principal(TAU + 0.25) - 0.25).abs() < 1e-12);
        assert!((principal(-TAU - 0.25) + 0.25).abs() < 1e-12);
    }

    #[test]
    fn angle_distance_is_symmetric_and_bounded() {
        assert!(angle_distance(0.1, TAU + 0.1) < 1e-12);
        assert!((angle_distance(-3.0, 3.0) - (TAU - 6.0)).abs() < 1e-12);
    }
}
