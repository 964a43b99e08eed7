//! Complex helpers on top of `libm`. `num-complex` computes these through
//! `num-traits`, whose backend switches to the platform math library when
//! any crate in the build enables `num-traits/std`; going through `libm`
//! keeps results bit-identical across builds.

use crate::C64;

/// `r · e^{jθ}`.
#[inline]
pub fn polar(r: f64, theta: f64) -> C64 {
    C64::new(r * libm::cos(theta), r * libm::sin(theta))
}

/// `e^{jθ}`.
#[inline]
pub fn cis(theta: f64) -> C64 {
    polar(1.0, theta)
}

#[inline]
pub fn abs(z: C64) -> f64 {
    libm::hypot(z.re, z.im)
}

/// Principal argument in `(−π, π]`.
#[inline]
pub fn arg(z: C64) -> f64 {
    libm::atan2(z.im, z.re)
}
