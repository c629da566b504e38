//! Scaled complementary error function and friends.
//!
//! `erfcx(z) = exp(z^2) erfc(z)` is evaluated without ever forming the
//! unscaled `erfc`, so it stays accurate where `erfc` underflows.

use std::f64::consts::PI;

const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_286_948_079_451_560_772_6;
const SERIES_LIMIT: f64 = 2.0;

/// `exp(z^2)` with the rounding error of `z*z` folded back in.
#[inline]
fn exp_square(z: f64) -> f64 {
    let hi = z * z;
    let lo = z.mul_add(z, -hi);
    hi.exp() * (1.0 + lo)
}

/// `exp(-z^2)` with the same correction.
#[inline]
fn exp_neg_square(z: f64) -> f64 {
    let hi = z * z;
    let lo = z.mul_add(z, -hi);
    (-hi).exp() * (1.0 - lo)
}

/// `exp(z^2) erf(z)` for small `z` from the all-positive series
/// `2/sqrt(pi) * sum 2^n z^(2n+1) / (2n+1)!!`.
fn scaled_erf_series(z: f64) -> f64 {
    let z2 = 2.0 * z * z;
    let mut term = z;
    let mut sum = z;
    let mut n = 0.0;
    while term.abs() > 1e-17 * sum.abs() {
        n += 1.0;
        term *= z2 / (2.0 * n + 1.0);
        sum += term;
    }
    2.0 * FRAC_1_SQRT_PI * sum
}

/// Laplace continued fraction `1/(z + (1/2)/(z + 1/(z + (3/2)/(z + ...))))`
/// by the modified Lentz method; converges quickly for `z >= 2`.
fn continued_fraction(z: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut f = z;
    let mut c = z;
    let mut d = 0.0;
    for n in 1..5000 {
        let a = 0.5 * n as f64;
        d = z + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = z + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    FRAC_1_SQRT_PI / f
}

/// Scaled complementary error function `exp(z^2) erfc(z)`.
///
/// Returns `+inf` for `z < -26.64`, where the value exceeds `f64::MAX`.
pub fn erfcx(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    if z >= 0.0 {
        if z > 5e7 {
            FRAC_1_SQRT_PI / z
        } else if z >= SERIES_LIMIT {
            continued_fraction(z)
        } else {
            exp_square(z) - scaled_erf_series(z)
        }
    } else {
        2.0 * exp_square(z) - erfcx(-z)
    }
}

/// Complementary error function, accurate in the far right tail.
pub fn erfc(z: f64) -> f64 {
    if z >= 0.0 {
        if z > 27.3 {
            return 0.0;
        }
        erfcx(z) * exp_neg_square(z)
    } else {
        2.0 - erfc(-z)
    }
}

pub fn erf(z: f64) -> f64 {
    if z.abs() < 0.5 {
        scaled_erf_series(z) * exp_neg_square(z)
    } else {
        1.0 - erfc(z)
    }
}

/// `1/sqrt(pi)`, exposed for callers that assemble heat kernels.
pub fn frac_1_sqrt_pi() -> f64 {
    FRAC_1_SQRT_PI
}

/// `sqrt(pi)`.
pub fn sqrt_pi() -> f64 {
    PI.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn anchor_values() {
        assert_eq!(erfcx(0.0), 1.0);
        // exp(1) * (2 - erfc(1)), erfc(1) = 0.157299207050285130658...
        assert_relative_eq!(erfcx(-1.0), 5.008_980_080_762_283, max_relative = 1e-14);
        assert_relative_eq!(
            erfcx(10.0),
            0.056_140_992_743_822_585_86,
            max_relative = 1e-14
        );
        assert_relative_eq!(erfc(1.0), 0.157_299_207_050_285_13, max_relative = 1e-14);
        assert_relative_eq!(erf(0.1), 0.112_462_916_018_284_89, max_relative = 1e-14);
    }

    #[test]
    fn continuous_across_branch_switch() {
        let below = erfcx(SERIES_LIMIT - 1e-12);
        let above = erfcx(SERIES_LIMIT);
        assert_relative_eq!(below, above, max_relative = 1e-12);
    }

    #[test]
    fn asymptote_and_overflow() {
        let z = 1e9;
        assert_relative_eq!(erfcx(z), 1.0 / (PI.sqrt() * z), max_relative = 1e-15);
        assert!(erfcx(-27.0).is_infinite());
        assert!(erfcx(-26.5).is_finite());
        assert_eq!(erfc(40.0), 0.0);
        assert_eq!(erfc(-40.0), 2.0);
    }
}
