//! Transform-space objects of the linearized system: the dispersion relation,
//! the Fourier-space flow matrix, and the Laplace-space kernels with their
//! boundary reflection coefficient.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::CMatrix2;
use crate::params::{BoundaryClass, ModelParams};

/// The two roots of `sigma^2 + nu xi^2 sigma + c^2 xi^2 = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexPair {
    pub sigma_plus: Complex64,
    pub sigma_minus: Complex64,
}

/// Laplace-space kernel value: smooth matrix plus the coefficient of the
/// Dirac mass in the (1,1) slot, nonzero only at coincident points.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LaplaceGreenValue {
    pub value: CMatrix2,
    pub delta_weight: Complex64,
}

/// `sigma_{+-} = -xi (nu xi +- sqrt(nu^2 xi^2 - 4 c^2)) / 2`, principal root.
///
/// In the real-discriminant regime the larger root is formed directly and the
/// smaller from the product `c^2 xi^2`, so neither suffers cancellation.
pub fn dispersion_sigma(xi: f64, p: &ModelParams) -> ComplexPair {
    let (c, nu) = (p.c, p.nu);
    let disc = nu * nu * xi * xi - 4.0 * c * c;
    let mean = -0.5 * nu * xi * xi;
    if xi == 0.0 {
        let z = Complex64::new(0.0, 0.0);
        return ComplexPair {
            sigma_plus: z,
            sigma_minus: z,
        };
    }
    if disc >= 0.0 {
        let q = 0.5 * xi * disc.sqrt();
        let big = mean - q.abs();
        let small = if big != 0.0 {
            c * c * xi * xi / big
        } else {
            mean
        };
        // sigma_plus takes the "+q" sign in the literal formula.
        let (sp, sm) = if q >= 0.0 { (big, small) } else { (small, big) };
        ComplexPair {
            sigma_plus: Complex64::new(sp, 0.0),
            sigma_minus: Complex64::new(sm, 0.0),
        }
    } else {
        let q = 0.5 * xi * (-disc).sqrt();
        ComplexPair {
            sigma_plus: Complex64::new(mean, -q),
            sigma_minus: Complex64::new(mean, q),
        }
    }
}

/// Scalar coefficients `(f0, f1)` with `exp(M t) = f0 I + f1 M`,
/// `M = -i xi A - xi^2 B`. Both are real for real `xi`.
pub fn flow_coefficients(xi: f64, t: f64, p: &ModelParams) -> (f64, f64) {
    let (c, nu) = (p.c, p.nu);
    let xi2 = xi * xi;
    let mean = -0.5 * nu * xi2;
    // delta^2 = mean^2 - c^2 xi^2; eigenvalues are mean +- delta.
    let d2 = xi2 * (0.25 * nu * nu * xi2 - c * c);
    let z2 = d2 * t * t;
    if z2.abs() < 1e-2 {
        // cosh(z) and sinh(z)/z as even series in z^2.
        let (mut ch, mut sc) = (1.0, 1.0);
        let (mut tc, mut ts) = (1.0, 1.0);
        for k in 1..12 {
            let k = k as f64;
            tc *= z2 / ((2.0 * k - 1.0) * (2.0 * k));
            ts *= z2 / ((2.0 * k) * (2.0 * k + 1.0));
            ch += tc;
            sc += ts;
        }
        let e = (mean * t).exp();
        return (e * (ch - mean * t * sc), e * t * sc);
    }
    if d2 > 0.0 {
        let d = d2.sqrt();
        let big = mean - d;
        let small = c * c * xi2 / big;
        let (eb, es) = ((big * t).exp(), (small * t).exp());
        let f1 = (es - eb) / (2.0 * d);
        let f0 = (small * eb - big * es) / (2.0 * d);
        (f0, f1)
    } else {
        let w = (-d2).sqrt();
        let e = (mean * t).exp();
        let (s, co) = (w * t).sin_cos();
        (e * (co - mean * s / w), e * s / w)
    }
}

/// Fourier-space fundamental solution `exp(t(-i xi A - xi^2 B))`.
pub fn fourier_fundamental(xi: f64, t: f64, p: &ModelParams) -> Result<CMatrix2> {
    if !(t >= 0.0) {
        return Err(Error::param(format!("time t = {t} must be non-negative")));
    }
    Ok(flow_matrix(xi, t, p))
}

pub(crate) fn flow_matrix(xi: f64, t: f64, p: &ModelParams) -> CMatrix2 {
    let (f0, f1) = flow_coefficients(xi, t, p);
    let f22 = lower_right(xi, t, p, f0, f1);
    let off = Complex64::new(0.0, -xi * f1);
    CMatrix2::new(
        Complex64::new(f0, 0.0),
        off,
        off * (p.c * p.c),
        Complex64::new(f22, 0.0),
    )
}

/// `f0 - nu xi^2 f1`, recomputed from the roots where the direct difference
/// would cancel (short waves, real eigenvalues).
pub(crate) fn lower_right(xi: f64, t: f64, p: &ModelParams, f0: f64, f1: f64) -> f64 {
    let (c, nu) = (p.c, p.nu);
    let xi2 = xi * xi;
    let mean = -0.5 * nu * xi2;
    let d2 = xi2 * (0.25 * nu * nu * xi2 - c * c);
    if d2 * t * t >= 1e-2 {
        let d = d2.sqrt();
        let big = mean - d;
        let small = c * c * xi2 / big;
        (small * (small * t).exp() - big * (big * t).exp()) / (2.0 * d)
    } else {
        f0 - nu * xi2 * f1
    }
}

/// `lambda(s) = s / sqrt(nu s + c^2)` on the principal branch.
pub fn lambda_of_s(s: Complex64, p: &ModelParams) -> Result<Complex64> {
    let q = radicand(s, p)?;
    Ok(s / q.sqrt())
}

fn radicand(s: Complex64, p: &ModelParams) -> Result<Complex64> {
    let q = s * p.nu + p.c * p.c;
    if q.norm() <= 1e-14 * (p.c * p.c) {
        return Err(Error::Domain(format!(
            "s = {s} is the branch point -c^2/nu of sqrt(nu s + c^2)"
        )));
    }
    Ok(q)
}

/// Laplace transform in `t` of the whole-line fundamental solution at offset `x`.
pub fn laplace_fundamental(x: f64, s: Complex64, p: &ModelParams) -> Result<LaplaceGreenValue> {
    let q = radicand(s, p)?;
    let root = q.sqrt();
    let lambda = s / root;
    let e = (-lambda * x.abs()).exp();
    let sgn = if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    };
    let c2 = p.c * p.c;
    let l12 = e * sgn / (q * 2.0);
    let value = CMatrix2::new(e * c2 / (q * root * 2.0), l12, l12 * c2, e / (root * 2.0));
    let delta_weight = if x == 0.0 {
        Complex64::new(p.nu, 0.0) / q
    } else {
        Complex64::new(0.0, 0.0)
    };
    Ok(LaplaceGreenValue {
        value,
        delta_weight,
    })
}

/// `R(s) = (a2 + a1 lambda) / (a2 - a1 lambda)`.
pub fn reflection_coefficient(s: Complex64, p: &ModelParams) -> Result<Complex64> {
    let lambda = lambda_of_s(s, p)?;
    let num = lambda * p.a1 + p.a2;
    let den = -lambda * p.a1 + p.a2;
    if den.norm() <= 1e-13 * (p.a2.abs() + (lambda * p.a1).norm()) {
        return Err(Error::Pole { s });
    }
    Ok(num / den)
}

/// Right-half-plane root of `a2 - a1 lambda(s) = 0`, present only when
/// `a1 a2 > 0`.
pub fn find_boundary_pole(p: &ModelParams) -> Option<Complex64> {
    if p.boundary_class() != BoundaryClass::MixedUnstable {
        return None;
    }
    quadratic_pole_candidates(p)
        .into_iter()
        .filter(|s| *s > 0.0)
        .map(|s| Complex64::new(s, 0.0))
        .find(|s| pole_residual(*s, p) <= 1e-12 * (1.0 + p.a2.abs()))
}

/// Real roots of `s^2 - k^2 nu s - k^2 c^2 = 0`, `k = a2/a1`, obtained by
/// squaring `lambda(s) = k`; callers filter spurious roots by residual.
pub fn quadratic_pole_candidates(p: &ModelParams) -> Vec<f64> {
    if p.a1 == 0.0 || p.a2 == 0.0 {
        return Vec::new();
    }
    let k2 = (p.a2 / p.a1).powi(2);
    let b = k2 * p.nu;
    let disc = (b * b + 4.0 * k2 * p.c * p.c).sqrt();
    let big = 0.5 * (b + disc);
    let small = -k2 * p.c * p.c / big;
    vec![big, small]
}

/// Real pole of the reflection coefficient in `(-c^2/nu, 0)` for the stable
/// mixed class; inverse contours must enclose it.
pub fn stable_real_pole(p: &ModelParams) -> Option<f64> {
    if p.boundary_class() != BoundaryClass::MixedStable {
        return None;
    }
    quadratic_pole_candidates(p)
        .into_iter()
        .filter(|s| *s < 0.0 && *s > -p.c * p.c / p.nu)
        .find(|s| pole_residual(Complex64::new(*s, 0.0), p) <= 1e-10 * (1.0 + p.a2.abs()))
}

fn pole_residual(s: Complex64, p: &ModelParams) -> f64 {
    match lambda_of_s(s, p) {
        Ok(l) => (-l * p.a1 + p.a2).norm(),
        Err(_) => f64::INFINITY,
    }
}

/// Laplace-space half-line Green's function
/// `L[G](x - y) + R(s) L[G](x + y) diag(1, -1)`.
pub fn laplace_green(x: f64, y: f64, s: Complex64, p: &ModelParams) -> Result<LaplaceGreenValue> {
    if !(x >= 0.0 && y >= 0.0) {
        return Err(Error::param(format!(
            "points must lie on the half line (x = {x}, y = {y})"
        )));
    }
    let direct = laplace_fundamental(x - y, s, p)?;
    let image = laplace_fundamental(x + y, s, p)?;
    let r = reflection_coefficient(s, p)?;
    let value = direct.value + image.value.scale(r).mul_diag(1.0, -1.0);
    Ok(LaplaceGreenValue {
        value,
        delta_weight: direct.delta_weight,
    })
}
