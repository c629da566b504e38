//! Space-time decay profiles used as comparison targets for pointwise bounds.
//!
//! All profiles are written in the regularized time `t + 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ModelParams;

/// Gaussian profile `(t+1)^(-alpha/2) exp(-(x - lambda (t+1))^2 / (d (t+1)))`.
#[inline]
pub fn theta(x: f64, t: f64, lambda: f64, d: f64, alpha: f64) -> f64 {
    let tp = t + 1.0;
    let z = x - lambda * tp;
    tp.powf(-0.5 * alpha) * (-(z * z) / (d * tp)).exp()
}

/// Algebraic profile `(sqrt(t+1) + |x - mu (t+1)|)^(-alpha)`.
#[inline]
pub fn psi(x: f64, t: f64, mu: f64, alpha: f64) -> f64 {
    let tp = t + 1.0;
    (tp.sqrt() + (x - mu * tp).abs()).powf(-alpha)
}

/// `psi^1(x,t;c) + psi^1(x,t;-c)`: the two acoustic families at unit strength.
#[inline]
pub fn a0(x: f64, t: f64, c: f64) -> f64 {
    psi(x, t, c, 1.0) + psi(x, t, -c, 1.0)
}

pub fn theta_envelope(x: f64, t: f64, lambda: f64, d: f64, alpha: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::param(format!(
            "Gaussian width D = {d} must be positive"
        )));
    }
    if !(t >= 0.0) {
        return Err(Error::param(format!("time t = {t} must be non-negative")));
    }
    Ok(theta(x, t, lambda, d, alpha))
}

pub fn psi_envelope(x: f64, t: f64, mu: f64, alpha: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::param(format!("time t = {t} must be non-negative")));
    }
    if !alpha.is_finite() {
        return Err(Error::param("exponent alpha must be finite"));
    }
    Ok(psi(x, t, mu, alpha))
}

pub fn a0_profile(x: f64, t: f64, c: f64) -> Result<f64> {
    if !(c > 0.0) {
        return Err(Error::param(format!(
            "sound speed c = {c} must be positive"
        )));
    }
    if !(t >= 0.0) {
        return Err(Error::param(format!("time t = {t} must be non-negative")));
    }
    Ok(a0(x, t, c))
}

/// Constants of a pointwise bound: tail constant `C`, Gaussian width `D`,
/// variance widening `eps` and derivative order.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundEnvelope {
    pub big_c: f64,
    pub d: f64,
    pub eps: f64,
    pub alpha: u32,
}

impl Default for BoundEnvelope {
    fn default() -> Self {
        BoundEnvelope {
            big_c: 10.0,
            d: 2.0,
            eps: 0.1,
            alpha: 0,
        }
    }
}

impl BoundEnvelope {
    pub fn validate(&self) -> Result<()> {
        if !(self.big_c > 0.0 && self.d > 0.0 && self.eps > 0.0) {
            return Err(Error::param(
                "envelope constants C, D, eps must be positive",
            ));
        }
        if self.alpha > 3 {
            return Err(Error::param(format!(
                "derivative order {} not in 0..=3",
                self.alpha
            )));
        }
        Ok(())
    }

    pub fn with_alpha(mut self, alpha: u32) -> Self {
        self.alpha = alpha;
        self
    }

    /// Right-hand side of the half-line Green's function bound: two direct
    /// acoustic ridges, the reflected ridge at `x + y = ct`, and the two
    /// exponential tails.
    pub fn green(&self, p: &ModelParams, x: f64, y: f64, t: f64) -> f64 {
        let nt = p.nu * t;
        let norm = 1.0 / nt.sqrt();
        let prefactor = t.powf(-0.5 * self.alpha as f64);
        let (dm, dp) = (x - y, x + y);
        let direct = (-(dm + p.c * t).powi(2) / (2.0 * nt)).exp()
            + (-(dm - p.c * t).powi(2) / (2.0 * nt)).exp();
        let reflected = (-(dp - p.c * t).powi(2) / ((2.0 * p.nu + self.eps) * t)).exp();
        let tails = (-(dm.abs() + t) / self.big_c).exp() + (-(dp.abs() + t) / self.big_c).exp();
        prefactor * norm * (direct + reflected) + tails
    }

    /// The individual ridge terms of [`BoundEnvelope::green`], for locating
    /// which ridge dominates at a point.
    pub fn green_terms(&self, p: &ModelParams, x: f64, y: f64, t: f64) -> [f64; 5] {
        let nt = p.nu * t;
        let pre = t.powf(-0.5 * self.alpha as f64) / nt.sqrt();
        let (dm, dp) = (x - y, x + y);
        [
            pre * (-(dm + p.c * t).powi(2) / (2.0 * nt)).exp(),
            pre * (-(dm - p.c * t).powi(2) / (2.0 * nt)).exp(),
            pre * (-(dp - p.c * t).powi(2) / ((2.0 * p.nu + self.eps) * t)).exp(),
            (-(dm.abs() + t) / self.big_c).exp(),
            (-(dp.abs() + t) / self.big_c).exp(),
        ]
    }

    /// Bound for the `k`-th x-derivative of the E-function: a Gaussian of
    /// widened variance `(d0 + eps) t` plus an exponential tail.
    pub fn e_function(&self, x: f64, t: f64, lambda: f64, d0: f64, k: u32) -> f64 {
        let z = x - lambda * t;
        t.powf(-0.5 * k as f64) * (-(z * z) / ((d0 + self.eps) * t)).exp()
            + (-(x.abs() + t) / self.big_c).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn theta_examples() {
        for t in [0.0, 1.0, 7.5] {
            assert_relative_eq!(theta(2.0 * (t + 1.0), t, 2.0, 3.0, 0.0), 1.0);
        }
        assert_relative_eq!(
            theta_envelope(0.0, 0.0, 1.0, 2.0, 2.0).unwrap(),
            (-0.5f64).exp(),
            epsilon = 1e-15
        );
        assert_relative_eq!(theta(0.0, 3.0, 0.0, 1.0, 2.0), 0.25);
        assert!(theta_envelope(0.0, 1.0, 0.0, 0.0, 1.0).is_err());
        assert!(theta_envelope(0.0, 1.0, 0.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn psi_examples() {
        let mu = 0.7;
        assert_relative_eq!(psi(mu * 4.0, 3.0, mu, 1.0), 0.5);
        assert_relative_eq!(psi(mu, 0.0, mu, 2.0), 1.0);
        assert_relative_eq!(psi(mu + 3.0, 0.0, mu, 1.0), 0.25);
        assert!(psi_envelope(0.0, -1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn a0_examples() {
        assert_relative_eq!(a0_profile(0.0, 0.0, 1.0).unwrap(), 1.0);
        assert_relative_eq!(a0(4.0, 3.0, 1.0), 0.6, epsilon = 1e-15);
        assert!(a0_profile(0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn evaluations_are_pure() {
        let a = theta(1.3, 2.1, 0.4, 1.7, 1.5);
        let b = theta(1.3, 2.1, 0.4, 1.7, 1.5);
        assert_eq!(a.to_bits(), b.to_bits());
        assert_eq!(
            psi(1.3, 2.1, -0.4, 1.5).to_bits(),
            psi(1.3, 2.1, -0.4, 1.5).to_bits()
        );
    }

    #[test]
    fn envelope_validation() {
        assert!(BoundEnvelope::default().validate().is_ok());
        assert!(BoundEnvelope {
            eps: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(BoundEnvelope {
            alpha: 4,
            ..Default::default()
        }
        .validate()
        .is_err());
    }

    proptest! {
        #[test]
        fn psi_reciprocal(x in -50.0f64..50.0, t in 0.0f64..100.0, mu in -3.0f64..3.0, alpha in 0.01f64..4.0) {
            let prod = psi(x, t, mu, alpha) * psi(x, t, mu, -alpha);
            prop_assert!((prod - 1.0).abs() < 1e-12);
        }

        #[test]
        fn psi_decreasing_away_from_ray(t in 0.0f64..50.0, mu in -2.0f64..2.0, d in 0.0f64..20.0, extra in 0.001f64..5.0) {
            let centre = mu * (t + 1.0);
            prop_assert!(psi(centre + d + extra, t, mu, 1.5) < psi(centre + d, t, mu, 1.5));
            prop_assert!(psi(centre - d - extra, t, mu, 1.5) < psi(centre - d, t, mu, 1.5));
        }

        #[test]
        fn a0_is_even(x in -100.0f64..100.0, t in 0.0f64..100.0, c in 0.1f64..3.0) {
            prop_assert!((a0(x, t, c) - a0(-x, t, c)).abs() <= 1e-15 * a0(x, t, c));
        }
    }
}
