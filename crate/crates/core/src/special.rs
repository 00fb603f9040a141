//! Normal distribution primitives built on the complementary error function.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Complementary error function, accurate to within one ulp.
#[inline]
pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Standard normal cumulative distribution, `Φ(x) = erfc(-x/√2)/2`.
///
/// Written in erfc form so the lower tail keeps full relative precision.
#[inline]
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal density.
#[inline]
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}
