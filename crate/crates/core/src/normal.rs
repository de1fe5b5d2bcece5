//! Standard normal density/CDF and closed-form moments of the soft-thresholded
//! Gaussian channel.

use libm::erfc;

pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal density.
#[inline]
pub fn pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal CDF, accurate in both tails.
#[inline]
pub fn cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// `P(lo < Z < hi)` for a standard normal `Z`, computed on the side of zero
/// that avoids cancellation. Infinite bounds are allowed.
pub fn mass_between(lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    if lo >= 0.0 {
        (cdf(-lo) - cdf(-hi)).max(0.0)
    } else if hi <= 0.0 {
        (cdf(hi) - cdf(lo)).max(0.0)
    } else {
        (1.0 - cdf(lo) - cdf(-hi)).max(0.0)
    }
}

/// Soft-threshold operator `sign(x) * max(|x| - t, 0)`.
#[inline]
pub fn soft_threshold(x: f64, t: f64) -> f64 {
    debug_assert!(t >= 0.0);
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

/// Moments of `eta_theta(X)` for `X ~ N(mean, sd^2)`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct ThresholdedMoments {
    /// `E[eta(X)]`
    pub first: f64,
    /// `E[eta(X)^2]`
    pub second: f64,
    /// `P(|X| > theta)`
    pub exceed: f64,
}

pub(crate) fn thresholded_moments(mean: f64, sd: f64, theta: f64) -> ThresholdedMoments {
    // upper tail: X > theta  <=>  Z > a ; lower tail: X < -theta  <=>  Z < b
    let a = (theta - mean) / sd;
    let b = (-theta - mean) / sd;
    let (phi_a, phi_b) = (pdf(a), pdf(b));
    let (upper, lower) = (cdf(-a), cdf(b));
    let c = mean - theta;
    let d = mean + theta;

    let first = c * upper + sd * phi_a + d * lower - sd * phi_b;
    let second = c * c * upper
        + 2.0 * c * sd * phi_a
        + sd * sd * (upper + a * phi_a)
        + d * d * lower
        - 2.0 * d * sd * phi_b
        + sd * sd * (lower - b * phi_b);
    ThresholdedMoments {
        first,
        second,
        exceed: upper + lower,
    }
}
