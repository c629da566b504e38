//! Closed-form leading-order kernels in physical space.
//!
//! The fundamental solution is, to leading order, a pair of heat kernels
//! riding on the acoustic characteristics `x = +-ct`, each carrying the
//! spectral projection of the flux matrix onto its family, plus a Dirac mass
//! that decays like `e^{-c^2 t/nu}`. The boundary adds an image kernel at
//! `x + y` corrected by the exponentially weighted moment `E`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::envelope::BoundEnvelope;
use crate::error::{Error, Result};
use crate::matrix::{KernelValue, Matrix2};
use crate::params::{BoundaryClass, ModelParams};
use crate::special::{erfcx, sqrt_pi};
use crate::spectral::find_boundary_pole;

/// Arguments of `E(x,t;lambda,D0) = int_0^inf e^{-gamma z} e^{-(x+z-lambda t)^2/(D0 t)} dz`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EFunctionArgs {
    pub x: f64,
    pub t: f64,
    pub lambda: f64,
    pub d0: f64,
    pub gamma: f64,
}

impl EFunctionArgs {
    pub fn new(x: f64, t: f64, lambda: f64, d0: f64, gamma: f64) -> Result<Self> {
        let a = EFunctionArgs {
            x,
            t,
            lambda,
            d0,
            gamma,
        };
        a.validate()?;
        Ok(a)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t > 0.0 && self.d0 > 0.0 && self.gamma > 0.0) {
            return Err(Error::param(format!(
                "E-function needs t, D0, gamma > 0 (got t = {}, D0 = {}, gamma = {})",
                self.t, self.d0, self.gamma
            )));
        }
        if !(self.x.is_finite() && self.lambda.is_finite()) {
            return Err(Error::param("E-function arguments must be finite"));
        }
        Ok(())
    }

    /// The Gaussian `e^{-(x - lambda t)^2 / (D0 t)}` that `E` is compared with.
    pub fn gaussian(&self) -> f64 {
        let a = self.x - self.lambda * self.t;
        (-(a * a) / (self.d0 * self.t)).exp()
    }
}

/// Closed form of `E` through `erfcx`, never forming the overflowing factor
/// `e^{gamma (x - lambda t) + gamma^2 D0 t / 4}` on its own.
pub fn e_function(args: &EFunctionArgs) -> Result<f64> {
    args.validate()?;
    Ok(e_value(args))
}

fn e_value(args: &EFunctionArgs) -> f64 {
    let a = args.x - args.lambda * args.t;
    let sigma = (args.d0 * args.t).sqrt();
    let w = (a + 0.5 * args.gamma * sigma * sigma) / sigma;
    let pre = 0.5 * sqrt_pi() * sigma;
    if w >= 0.0 {
        pre * erfcx(w) * (-(a / sigma).powi(2)).exp()
    } else {
        // Here gamma a + gamma^2 sigma^2 / 4 = gamma sigma w - (gamma sigma / 2)^2 < 0.
        let expo = args.gamma * sigma * w - 0.25 * (args.gamma * sigma).powi(2);
        pre * expo.exp() * (2.0 - erfcx(-w) * (-w * w).exp())
    }
}

/// `dE/dx = gamma E - e^{-(x - lambda t)^2 / (D0 t)}` (integration by parts).
pub fn e_function_dx(args: &EFunctionArgs) -> Result<f64> {
    args.validate()?;
    Ok(args.gamma * e_value(args) - args.gaussian())
}

/// Ratio of `|d^k E / dx^k|` (`k` = `env.alpha`, 0 or 1) to the bound
/// `t^{-k/2} e^{-(x-lambda t)^2/((D0+eps) t)} + e^{-(|x|+t)/C}`.
pub fn e_bound_check(args: &EFunctionArgs, env: &BoundEnvelope) -> Result<f64> {
    args.validate()?;
    env.validate()?;
    let value = match env.alpha {
        0 => e_value(args),
        1 => e_function_dx(args)?.abs(),
        k => {
            return Err(Error::param(format!(
                "E-function bound is stated for k = 0, 1 (got {k})"
            )))
        }
    };
    Ok(value / env.e_function(args.x, args.t, args.lambda, args.d0, env.alpha))
}

/// The two acoustic families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// `P = (I +- A/c) / 2`, the eigenprojection of the flux matrix for `+-c`.
pub fn acoustic_projection(sign: Sign, p: &ModelParams) -> Matrix2 {
    let s = 0.5 * sign.value();
    Matrix2::new(0.5, s / p.c, s * p.c, 0.5)
}

/// `e^{-(x - v t)^2 / (2 nu t)} / sqrt(2 pi nu t)`.
#[inline]
pub fn heat_ridge(x: f64, t: f64, speed: f64, nu: f64) -> f64 {
    let z = x - speed * t;
    (-(z * z) / (2.0 * nu * t)).exp() / (2.0 * PI * nu * t).sqrt()
}

fn check_time(t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!(
            "leading-order kernels need t > 0 (got {t})"
        )));
    }
    Ok(())
}

/// Smooth leading part of the whole-line fundamental solution.
pub fn fundamental_smooth(x: f64, t: f64, p: &ModelParams) -> Matrix2 {
    acoustic_projection(Sign::Plus, p).scale(heat_ridge(x, t, p.c, p.nu))
        + acoustic_projection(Sign::Minus, p).scale(heat_ridge(x, t, -p.c, p.nu))
}

/// Leading-order whole-line fundamental solution: the two acoustic heat
/// kernels plus the decaying Dirac mass in the density slot.
pub fn fundamental_leading(x: f64, t: f64, p: &ModelParams) -> Result<KernelValue> {
    check_time(t)?;
    let mut k = KernelValue::smooth(fundamental_smooth(x, t, p));
    k.push_delta(
        0.0,
        Matrix2::DENSITY.scale((-p.singular_decay_rate() * t).exp()),
    );
    Ok(k)
}

/// Leading-order image kernel `G_mir(w, t)`, `w = x + y`, for the stable
/// mixed condition.
pub fn mirror_leading(w: f64, t: f64, p: &ModelParams) -> Result<Matrix2> {
    check_time(t)?;
    let gamma = match (p.boundary_class(), p.gamma()) {
        (BoundaryClass::MixedStable, Some(g)) => g,
        (class, _) => {
            return Err(Error::usage(format!(
                "mirror kernel with an E-correction applies to the stable mixed class, not {class}"
            )))
        }
    };
    if !(w >= 0.0) {
        return Err(Error::param(format!(
            "mirror argument w = x + y must be non-negative (got {w})"
        )));
    }
    Ok(mirror_unchecked(w, t, gamma, p))
}

fn mirror_unchecked(w: f64, t: f64, gamma: f64, p: &ModelParams) -> Matrix2 {
    let norm = 1.0 / (2.0 * PI * p.nu * t).sqrt();
    let e = |lambda: f64| {
        e_value(&EFunctionArgs {
            x: w,
            t,
            lambda,
            d0: 2.0 * p.nu,
            gamma,
        })
    };
    let g = acoustic_projection(Sign::Plus, p).scale(2.0 * gamma * norm * e(p.c))
        + acoustic_projection(Sign::Minus, p).scale(2.0 * gamma * norm * e(-p.c));
    (g - fundamental_smooth(w, t, p)) * Matrix2::FLIP
}

/// Leading-order half-line Green's function `G(x - y) + boundary part`.
///
/// The Dirac mass at `x = y` is reported; the image masses sit at `x = -y`,
/// outside the half line, and are never listed.
pub fn green_leading(x: f64, y: f64, t: f64, p: &ModelParams) -> Result<KernelValue> {
    check_time(t)?;
    if !(x >= 0.0 && y >= 0.0) {
        return Err(Error::param(format!(
            "points must lie on the half line (x = {x}, y = {y})"
        )));
    }
    let direct = fundamental_smooth(x - y, t, p);
    let boundary = match p.boundary_class() {
        BoundaryClass::Dirichlet => fundamental_smooth(x + y, t, p) * Matrix2::FLIP,
        BoundaryClass::Neumann => -(fundamental_smooth(x + y, t, p) * Matrix2::FLIP),
        BoundaryClass::MixedStable => {
            mirror_unchecked(x + y, t, p.gamma().expect("mixed class has gamma"), p)
        }
        BoundaryClass::MixedUnstable => {
            let pole = find_boundary_pole(p).map(|s| s.re).unwrap_or(f64::NAN);
            return Err(Error::usage(format!(
                "a1 a2 > 0: the reflection coefficient has a pole at s* = {pole:.12} in the right \
                 half plane, so the Green's function grows like e^(s* t) and has no leading-order form"
            )));
        }
    };
    let mut k = KernelValue::smooth(direct + boundary);
    k.push_delta(
        y,
        Matrix2::DENSITY.scale((-p.singular_decay_rate() * t).exp()),
    );
    Ok(k)
}
