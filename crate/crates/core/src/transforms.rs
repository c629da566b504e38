//! Numerical inverse transforms used as oracles for the closed-form kernels.
//!
//! The Fourier-space flow matrix does not decay in `xi`: its (1,1) entry tends
//! to `e^{-c^2 t/nu}` and the short-wave parts of all entries decay only
//! algebraically. The inverse Fourier transform therefore splits off the
//! short-wave asymptote, expanded in powers of `v = 1/(xi^2 + kappa^2)` whose
//! inverse transforms are known exactly, and integrates the smooth,
//! rapidly decaying remainder with composite Gauss-Legendre panels.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{CMatrix2, KernelValue, Matrix2};
use crate::params::{BoundaryClass, ModelParams};
use crate::quadrature::{
    gauss_legendre, integrate_to_infinity, integrate_with_breaks, QuadOptions,
};
use crate::spectral::{
    find_boundary_pole, flow_coefficients, laplace_fundamental, laplace_green, lower_right,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContourKind {
    /// Fixed Talbot contour (cotangent shape) with Weideman's parameters.
    Talbot,
    /// Parabola `s = sigma0 + mu (1 + i u)^2`.
    Parabolic,
    /// Bromwich line `Re s = sigma`, integrated adaptively.
    ShiftedLine,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureConfig {
    /// Truncation wavenumber of the residual Fourier integral.
    pub xi_max: f64,
    /// Number of Gauss-Legendre panels on `[0, xi_max]` (fine level).
    pub n_xi: usize,
    /// Order of the short-wave expansion subtracted before quadrature.
    pub series_order: usize,
    /// Primary inverse-Laplace contour.
    pub contour: ContourKind,
    /// Second contour used to self-validate; `None` skips the check.
    pub check_contour: Option<ContourKind>,
    /// Nodes on the Talbot/parabolic contours.
    pub n_nodes: usize,
    /// Contour shift; `None` picks `max(0, Re s*) + 1/t` for the line and
    /// `max(0, Re s*)` for the deformed contours.
    pub abscissa: Option<f64>,
    /// Target accuracy relative to the kernel scale `1/sqrt(2 pi nu t)`.
    pub tol: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            xi_max: 40.0,
            n_xi: 2000,
            series_order: 6,
            contour: ContourKind::Talbot,
            check_contour: Some(ContourKind::Parabolic),
            n_nodes: 64,
            abscissa: None,
            tol: 1e-8,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.xi_max > 0.0) || self.n_xi < 2 || self.n_nodes < 8 {
            return Err(Error::config(format!(
                "quadrature needs xi_max > 0, n_xi >= 2, n_nodes >= 8 (got {}, {}, {})",
                self.xi_max, self.n_xi, self.n_nodes
            )));
        }
        if self.series_order == 0 || self.series_order > 16 {
            return Err(Error::config("series_order must lie in 1..=16"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::config("tol must be positive"));
        }
        Ok(())
    }

    /// Largest `|x|` whose oscillation the fine panels still resolve.
    pub fn x_resolved(&self) -> f64 {
        2.0 * self.n_xi as f64 / self.xi_max
    }
}

// ---------------------------------------------------------------------------
// Truncated power series.

#[derive(Clone, Debug, PartialEq)]
struct Series(Vec<f64>);

impl Series {
    fn variable(n: usize) -> Self {
        let mut v = vec![0.0; n];
        if n > 1 {
            v[1] = 1.0;
        }
        Series(v)
    }

    fn len(&self) -> usize {
        self.0.len()
    }

    fn scale(&self, k: f64) -> Series {
        Series(self.0.iter().map(|a| a * k).collect())
    }

    fn shift(&self, c: f64) -> Series {
        let mut s = self.clone();
        s.0[0] += c;
        s
    }

    fn mul(&self, o: &Series) -> Series {
        let n = self.len();
        let mut out = vec![0.0; n];
        for i in 0..n {
            for j in 0..n - i {
                out[i + j] += self.0[i] * o.0[j];
            }
        }
        Series(out)
    }

    fn recip(&self) -> Series {
        let n = self.len();
        let a0 = self.0[0];
        let mut out = vec![0.0; n];
        out[0] = 1.0 / a0;
        for k in 1..n {
            let s: f64 = (1..=k).map(|j| self.0[j] * out[k - j]).sum();
            out[k] = -s / a0;
        }
        Series(out)
    }

    fn sqrt(&self) -> Series {
        let n = self.len();
        let mut out = vec![0.0; n];
        out[0] = self.0[0].sqrt();
        for k in 1..n {
            let s: f64 = (1..k).map(|j| out[j] * out[k - j]).sum();
            out[k] = (self.0[k] - s) / (2.0 * out[0]);
        }
        Series(out)
    }

    fn exp(&self) -> Series {
        // f' = a' f, coefficientwise.
        let n = self.len();
        let mut out = vec![0.0; n];
        out[0] = self.0[0].exp();
        for k in 1..n {
            let s: f64 = (1..=k).map(|j| j as f64 * self.0[j] * out[k - j]).sum();
            out[k] = s / k as f64;
        }
        Series(out)
    }

    /// Re-expands a series in `u = 1/xi^2` as a series in `v = 1/(xi^2 + k2)`,
    /// using `u = v / (1 - k2 v)`.
    fn to_shifted_basis(&self, k2: f64) -> Series {
        let n = self.len();
        let mut out = vec![0.0; n];
        out[0] = self.0[0];
        for j in 1..n {
            // u^j = v^j sum_m binom(j + m - 1, m) k2^m v^m
            let mut coeff = 1.0;
            for m in 0..n - j {
                out[j + m] += self.0[j] * coeff;
                coeff *= k2 * (j + m) as f64 / (m + 1) as f64;
            }
        }
        Series(out)
    }

    fn eval(&self, v: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, a| acc * v + a)
    }
}

/// `(1/2 pi) int e^{i xi x} (xi^2 + kappa^2)^{-k} d xi` and its x-derivative.
fn rational_inverse(k: usize, kappa: f64, x: f64) -> (f64, f64) {
    let ax = x.abs();
    let k1 = k - 1;
    let mut fact_k1 = 1.0;
    for i in 1..=k1 {
        fact_k1 *= i as f64;
    }
    let pre = 1.0 / (fact_k1 * (2.0 * kappa).powi(2 * k as i32 - 1));
    // P(|x|) = sum_j (k-1+j)! / (j! (k-1-j)!) (2 kappa |x|)^{k-1-j}
    let (mut p, mut dp) = (0.0, 0.0);
    for j in 0..=k1 {
        let mut c = 1.0;
        for i in (k1 - j + 1)..=(k1 + j) {
            c *= i as f64;
        }
        for i in 1..=j {
            c /= i as f64;
        }
        let pow = k1 - j;
        let base = 2.0 * kappa * ax;
        p += c * base.powi(pow as i32);
        if pow > 0 {
            dp += c * pow as f64 * 2.0 * kappa * base.powi(pow as i32 - 1);
        }
    }
    let e = (-kappa * ax).exp();
    let value = pre * e * p;
    let sgn = if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    };
    (value, sgn * pre * e * (dp - kappa * p))
}

// ---------------------------------------------------------------------------
// Inverse Fourier transform.

struct Level {
    nodes: Vec<f64>,
    /// Weight times the three residuals at each node: (R11, xi R12', R22).
    residual: Vec<[f64; 3]>,
}

/// Inverse Fourier transform of the flow matrix at one fixed time, prepared
/// once and evaluated at arbitrarily many offsets `x`.
pub struct FourierOracle {
    t: f64,
    c2: f64,
    kappa: f64,
    s11: Series,
    s12: Series,
    s22: Series,
    fine: Level,
    coarse: Level,
    scale: f64,
    tol: f64,
    x_resolved: f64,
}

impl FourierOracle {
    pub fn new(t: f64, p: &ModelParams, cfg: &QuadratureConfig) -> Result<Self> {
        cfg.validate()?;
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::Domain(format!(
                "inverse Fourier oracle needs t > 0 (got {t})"
            )));
        }
        let n = cfg.series_order + 1;
        let (c, nu) = (p.c, p.nu);
        let u = Series::variable(n);
        // Short-wave asymptote as functions of u = 1/xi^2:
        //   r = sqrt(nu^2 - 4 c^2 u), h = -2 c^2 / (nu + r),
        //   S11 = (nu + r) e^{h t} / (2 r), S12 = u e^{h t} / r, S22 = h u e^{h t} / r.
        let r = u.scale(-4.0 * c * c).shift(nu * nu).sqrt();
        let h = r.shift(nu).recip().scale(-2.0 * c * c);
        let e = h.scale(t).exp();
        let inv_r = r.recip();
        let s11 = r.shift(nu).mul(&e).mul(&inv_r).scale(0.5);
        let s12 = u.mul(&e).mul(&inv_r);
        let s22 = h.mul(&s12);
        let kappa = 2.0 * c / nu;
        let k2 = kappa * kappa;
        let (s11, s12, s22) = (
            s11.to_shifted_basis(k2),
            s12.to_shifted_basis(k2),
            s22.to_shifted_basis(k2),
        );

        let build = |panels: usize| -> Level {
            let (gx, gw) = gauss_legendre(10);
            let width = cfg.xi_max / panels as f64;
            let mut nodes = Vec::with_capacity(panels * gx.len());
            let mut residual = Vec::with_capacity(panels * gx.len());
            for k in 0..panels {
                let mid = (k as f64 + 0.5) * width;
                for (x, w) in gx.iter().zip(&gw) {
                    let xi = mid + 0.5 * width * x;
                    let wt = 0.5 * width * w / PI;
                    let v = 1.0 / (xi * xi + k2);
                    let (f0, f1) = flow_coefficients(xi, t, p);
                    let f22 = lower_right(xi, t, p, f0, f1);
                    nodes.push(xi);
                    residual.push([
                        wt * (f0 - s11.eval(v)),
                        wt * xi * (f1 - s12.eval(v)),
                        wt * (f22 - s22.eval(v)),
                    ]);
                }
            }
            Level { nodes, residual }
        };
        let fine = build(cfg.n_xi);
        let coarse = build(cfg.n_xi.div_ceil(2));
        Ok(FourierOracle {
            t,
            c2: c * c,
            kappa,
            s11,
            s12,
            s22,
            fine,
            coarse,
            scale: 1.0 / (2.0 * PI * nu * t).sqrt(),
            tol: cfg.tol,
            x_resolved: cfg.x_resolved(),
        })
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    /// Weight of the Dirac mass at the origin (the constant of the asymptote).
    pub fn delta_weight(&self) -> f64 {
        self.s11.0[0]
    }

    fn analytic(&self, x: f64) -> Matrix2 {
        let (mut g11, mut g12, mut g22) = (0.0, 0.0, 0.0);
        for k in 1..self.s11.len() {
            let (f, df) = rational_inverse(k, self.kappa, x);
            g11 += self.s11.0[k] * f;
            g12 -= self.s12.0[k] * df;
            g22 += self.s22.0[k] * f;
        }
        Matrix2::new(g11, g12, self.c2 * g12, g22)
    }

    fn residual(level: &Level, x: f64) -> Matrix2 {
        let (mut g11, mut g12, mut g22) = (0.0, 0.0, 0.0);
        for (xi, r) in level.nodes.iter().zip(&level.residual) {
            let (s, c) = (xi * x).sin_cos();
            g11 += c * r[0];
            g12 += s * r[1];
            g22 += c * r[2];
        }
        Matrix2::new(g11, g12, 0.0, g22)
    }

    fn assemble(&self, level: &Level, x: f64) -> Matrix2 {
        let mut m = Self::residual(level, x) + self.analytic(x);
        m.0[1][0] = self.c2 * m.0[0][1];
        m
    }

    /// Smooth part at offset `x` (fine level only).
    pub fn smooth(&self, x: f64) -> Matrix2 {
        self.assemble(&self.fine, x)
    }

    /// Smooth part with the fine/coarse panel difference as error estimate.
    pub fn smooth_with_error(&self, x: f64) -> (Matrix2, f64) {
        let fine = self.assemble(&self.fine, x);
        let coarse = self.assemble(&self.coarse, x);
        (fine, (fine - coarse).max_abs())
    }

    /// Full kernel value with accuracy check.
    pub fn eval(&self, x: f64) -> Result<KernelValue> {
        if x.abs() > self.x_resolved {
            return Err(Error::config(format!(
                "|x| = {} exceeds the resolved range {} of the xi panels; raise n_xi",
                x.abs(),
                self.x_resolved
            )));
        }
        let (smooth, err) = self.smooth_with_error(x);
        if err > self.tol * self.scale {
            return Err(Error::Accuracy {
                requested: self.tol,
                achieved: err / self.scale,
                context: format!("inverse Fourier transform at x = {x}, t = {}", self.t),
            });
        }
        let mut k = KernelValue::smooth(smooth);
        k.push_delta(0.0, Matrix2::DENSITY.scale(self.delta_weight()));
        Ok(k)
    }
}

/// Inverse Fourier transform of the flow matrix at a single point.
pub fn invert_fourier_fundamental(
    x: f64,
    t: f64,
    p: &ModelParams,
    cfg: &QuadratureConfig,
) -> Result<KernelValue> {
    FourierOracle::new(t, p, cfg)?.eval(x)
}

/// Batched form: one oracle, many offsets, evaluated in parallel.
pub fn invert_fourier_fundamental_many(
    xs: &[f64],
    t: f64,
    p: &ModelParams,
    cfg: &QuadratureConfig,
) -> Result<Vec<KernelValue>> {
    let oracle = FourierOracle::new(t, p, cfg)?;
    xs.par_iter().map(|&x| oracle.eval(x)).collect()
}

// ---------------------------------------------------------------------------
// Inverse Laplace transform.

/// Result of a contour inversion with its self-check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LaplaceInversion {
    pub value: Matrix2,
    /// Difference to the check contour (or the quadrature estimate).
    pub error_estimate: f64,
    /// Largest imaginary part left over by the primary contour sum.
    pub imag_residue: f64,
}

fn default_shift(p: &ModelParams) -> f64 {
    find_boundary_pole(p).map(|s| s.re).unwrap_or(0.0)
}

/// Nodes `s_k` and weights `w_k` with `f(t) ~ sum_k w_k e^{s_k t} F(s_k)`.
fn contour_nodes(kind: ContourKind, t: f64, n: usize, sigma0: f64) -> Vec<(Complex64, Complex64)> {
    let i = Complex64::new(0.0, 1.0);
    match kind {
        ContourKind::Talbot => {
            let (a, b, cc, d) = (-0.6122, 0.5017, 0.6407, 0.2645);
            let scale = n as f64 / t;
            let hstep = 2.0 * PI / n as f64;
            (0..n)
                .map(|k| {
                    let th = -PI + (k as f64 + 0.5) * hstep;
                    let (sn, cs) = (cc * th).sin_cos();
                    let s = Complex64::new(sigma0 + scale * (a + b * th * cs / sn), scale * d * th);
                    let ds = Complex64::new(scale * b * (cs / sn - cc * th / (sn * sn)), scale * d);
                    (s, ds * hstep / (2.0 * PI * i))
                })
                .collect()
        }
        ContourKind::Parabolic => {
            let h = 3.0 / n as f64;
            let mu = PI * n as f64 / (12.0 * t);
            (0..=2 * n)
                .map(|k| {
                    let u = (k as f64 - n as f64) * h;
                    let z = Complex64::new(1.0, u);
                    let s = z * z * mu + sigma0;
                    let ds = z * i * (2.0 * mu);
                    (s, ds * h / (2.0 * PI * i))
                })
                .collect()
        }
        ContourKind::ShiftedLine => Vec::new(),
    }
}

fn check_contour_clear(nodes: &[(Complex64, Complex64)], p: &ModelParams) -> Result<()> {
    for (s, _) in nodes {
        let q = *s * p.nu + p.c * p.c;
        if q.norm() < 1e-8 * p.c * p.c {
            return Err(Error::config(format!(
                "contour node s = {s} lies on the branch point -c^2/nu; change n_nodes or abscissa"
            )));
        }
    }
    Ok(())
}

fn deformed_sum<F>(
    kind: ContourKind,
    t: f64,
    n: usize,
    sigma0: f64,
    p: &ModelParams,
    f: &F,
) -> Result<CMatrix2>
where
    F: Fn(Complex64) -> Result<CMatrix2>,
{
    let nodes = contour_nodes(kind, t, n, sigma0);
    check_contour_clear(&nodes, p)?;
    let mut acc = CMatrix2::zero();
    for (s, w) in nodes {
        acc = acc + f(s)?.scale(w * (s * t).exp());
    }
    Ok(acc)
}

fn line_integral<F>(t: f64, sigma: f64, f: &F, tol: f64) -> Result<(Matrix2, f64)>
where
    F: Fn(Complex64) -> Result<CMatrix2>,
{
    // f(t) = e^{sigma t}/pi int_0^inf Re(F(sigma + i w) e^{i w t}) dw
    let failure = std::cell::Cell::new(None);
    let r = integrate_to_infinity(
        |w: f64| {
            let s = Complex64::new(sigma, w);
            match f(s) {
                Ok(v) => v.scale(Complex64::new(0.0, w * t).exp()).re(),
                Err(e) => {
                    failure.set(Some(e.to_string()));
                    Matrix2::ZERO
                }
            }
        },
        0.0,
        &[1.0, 10.0, 100.0],
        QuadOptions {
            abs_tol: tol * 1e-2,
            rel_tol: 1e-10,
            max_intervals: 20_000,
        },
    );
    if let Some(msg) = failure.take() {
        return Err(Error::config(format!(
            "line contour hit a singular point: {msg}"
        )));
    }
    let k = (sigma * t).exp() / PI;
    Ok((r.value.scale(k), r.error * k))
}

/// Inverts a Laplace-space kernel `F(s)` at time `t` with the configured
/// contour and its check contour.
pub fn invert_laplace_with<F>(
    f: F,
    t: f64,
    p: &ModelParams,
    cfg: &QuadratureConfig,
) -> Result<LaplaceInversion>
where
    F: Fn(Complex64) -> Result<CMatrix2>,
{
    cfg.validate()?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!(
            "inverse Laplace transform needs t > 0 (got {t})"
        )));
    }
    let pole = default_shift(p);
    let run = |kind: ContourKind| -> Result<(Matrix2, f64, f64)> {
        match kind {
            ContourKind::ShiftedLine => {
                let sigma = cfg.abscissa.unwrap_or(pole.max(0.0) + 1.0 / t);
                if sigma <= pole {
                    return Err(Error::config(format!(
                        "line abscissa {sigma} must lie right of the boundary pole {pole}"
                    )));
                }
                let scale = 1.0 / (2.0 * PI * p.nu * t).sqrt();
                let (v, e) = line_integral(t, sigma, &f, cfg.tol * scale)?;
                Ok((v, e, 0.0))
            }
            kind => {
                let sigma0 = cfg.abscissa.unwrap_or(pole.max(0.0));
                if pole > 0.0 && sigma0 < pole {
                    return Err(Error::config(format!(
                        "contour shift {sigma0} leaves the boundary pole {pole} outside"
                    )));
                }
                let z = deformed_sum(kind, t, cfg.n_nodes, sigma0, p, &f)?;
                Ok((z.re(), 0.0, z.im().max_abs()))
            }
        }
    };
    let (value, qerr, imag) = run(cfg.contour)?;
    let error_estimate = match cfg.check_contour {
        Some(kind) if kind != cfg.contour => {
            let (other, oerr, _) = run(kind)?;
            (value - other).max_abs() + qerr + oerr
        }
        _ => qerr,
    };
    Ok(LaplaceInversion {
        value,
        error_estimate,
        imag_residue: imag,
    })
}

impl LaplaceInversion {
    /// Error estimate relative to `max(1/sqrt(2 pi nu t), |value|)`.
    pub fn relative_error(&self, t: f64, p: &ModelParams) -> f64 {
        let scale = (1.0 / (2.0 * PI * p.nu * t).sqrt()).max(self.value.max_abs());
        self.error_estimate / scale
    }
}

fn accuracy_gate(
    inv: LaplaceInversion,
    t: f64,
    p: &ModelParams,
    cfg: &QuadratureConfig,
    what: &str,
) -> Result<Matrix2> {
    let achieved = inv.relative_error(t, p);
    if achieved > cfg.tol {
        return Err(Error::Accuracy {
            requested: cfg.tol,
            achieved,
            context: what.to_string(),
        });
    }
    Ok(inv.value)
}

/// Smooth part of the half-line Green's function by contour inversion of its
/// Laplace transform (`x != y`).
pub fn invert_laplace_green(
    x: f64,
    y: f64,
    t: f64,
    p: &ModelParams,
    cfg: &QuadratureConfig,
) -> Result<Matrix2> {
    let inv = invert_laplace_green_detailed(x, y, t, p, cfg)?;
    accuracy_gate(
        inv,
        t,
        p,
        cfg,
        &format!("inverse Laplace transform at x = {x}, y = {y}, t = {t}"),
    )
}

pub fn invert_laplace_green_detailed(
    x: f64,
    y: f64,
    t: f64,
    p: &ModelParams,
    cfg: &QuadratureConfig,
) -> Result<LaplaceInversion> {
    if x == y {
        return Err(Error::param(
            "the Laplace oracle returns the smooth part only; use x != y",
        ));
    }
    invert_laplace_with(|s| laplace_green(x, y, s, p).map(|v| v.value), t, p, cfg)
}

/// Whole-line fundamental solution by contour inversion (`x != 0`), an
/// oracle independent of the Fourier route.
pub fn invert_laplace_fundamental(
    x: f64,
    t: f64,
    p: &ModelParams,
    cfg: &QuadratureConfig,
) -> Result<Matrix2> {
    if x == 0.0 {
        return Err(Error::param(
            "the Laplace oracle returns the smooth part only; use x != 0",
        ));
    }
    let inv = invert_laplace_with(|s| laplace_fundamental(x, s, p).map(|v| v.value), t, p, cfg)?;
    accuracy_gate(
        inv,
        t,
        p,
        cfg,
        &format!("inverse Laplace transform at x = {x}, t = {t}"),
    )
}

// ---------------------------------------------------------------------------
// Mirror kernel by direct quadrature.

/// `g(w,t) = 2 gamma int_0^inf e^{-gamma z} G(w + z, t) dz` with the smooth
/// part of `G` from a prepared Fourier oracle.
pub fn boundary_moment(
    oracle: &FourierOracle,
    w: f64,
    gamma: f64,
    p: &ModelParams,
    tol: f64,
) -> Result<Matrix2> {
    let t = oracle.time();
    let ridge = p.c * t - w;
    let width = (p.nu * t).sqrt();
    let breaks: Vec<f64> = [ridge - 4.0 * width, ridge, ridge + 4.0 * width]
        .into_iter()
        .filter(|b| *b > 0.0)
        .collect();
    let scale = 1.0 / (2.0 * PI * p.nu * t).sqrt();
    // The integrand is negligible past the ridge plus 12 widths or the
    // point where e^{-gamma z} has dropped below tol.
    let end = (ridge + 12.0 * width)
        .max(0.0)
        .max(-(tol * 1e-3).ln() / gamma);
    let end = end.min(oracle.x_resolved - w).max(0.0);
    let r = integrate_with_breaks(
        |z: f64| oracle.smooth(w + z).scale((-gamma * z).exp()),
        0.0,
        end,
        &breaks,
        QuadOptions::new(tol * scale * 1e-2, 1e-12),
    );
    if !r.converged {
        return Err(Error::Accuracy {
            requested: tol,
            achieved: r.error / scale,
            context: format!("mirror z-quadrature at w = {w}, t = {t}"),
        });
    }
    Ok(r.value.scale(2.0 * gamma))
}

/// `G_mir(w,t) = (-G(w,t) + g(w,t)) diag(1,-1)` by z-quadrature.
pub fn mirror_by_quadrature(
    w: f64,
    t: f64,
    p: &ModelParams,
    cfg: &QuadratureConfig,
) -> Result<Matrix2> {
    let oracle = FourierOracle::new(t, p, cfg)?;
    mirror_with_oracle(&oracle, w, p, cfg.tol)
}

pub fn mirror_with_oracle(
    oracle: &FourierOracle,
    w: f64,
    p: &ModelParams,
    tol: f64,
) -> Result<Matrix2> {
    let gamma = match (p.boundary_class(), p.gamma()) {
        (BoundaryClass::MixedStable, Some(g)) => g,
        (class, _) => {
            return Err(Error::usage(format!(
                "mirror quadrature applies to the stable mixed class, not {class}"
            )))
        }
    };
    if !(w >= 0.0) {
        return Err(Error::param(format!(
            "mirror argument w must be non-negative (got {w})"
        )));
    }
    let g = boundary_moment(oracle, w, gamma, p, tol)?;
    Ok((g - oracle.smooth(w)) * Matrix2::FLIP)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{fundamental_smooth, mirror_leading};
    use crate::quadrature::integrate;
    use approx::assert_relative_eq;

    fn unit() -> ModelParams {
        ModelParams::mixed(1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn series_arithmetic() {
        let n = 6;
        let x = Series::variable(n);
        // exp(x) * exp(-x) = 1
        let one = x.exp().mul(&x.scale(-1.0).exp());
        assert!((one.0[0] - 1.0).abs() < 1e-15 && one.0[1..].iter().all(|c| c.abs() < 1e-15));
        // sqrt(1 + x)^2 = 1 + x
        let s = x.shift(1.0).sqrt();
        let sq = s.mul(&s);
        assert!((sq.0[1] - 1.0).abs() < 1e-15 && sq.0[2..].iter().all(|c| c.abs() < 1e-15));
        // 1/(1 - x) = sum x^k
        let g = x.scale(-1.0).shift(1.0).recip();
        assert!(g.0.iter().all(|c| (c - 1.0).abs() < 1e-15));
        // u -> v re-expansion: u = v / (1 - k2 v)
        let u = Series::variable(n).to_shifted_basis(2.0);
        for k in 1..n {
            assert_relative_eq!(u.0[k], 2f64.powi(k as i32 - 1));
        }
    }

    #[test]
    fn rational_inverse_transforms() {
        // Compare the closed forms with direct quadrature of the cosine transform.
        let kappa = 1.3;
        for k in 1..=4 {
            for x in [0.0, 0.7, 3.0] {
                let q = integrate_to_infinity(
                    |xi: f64| (xi * x).cos() / (xi * xi + kappa * kappa).powi(k as i32) / PI,
                    0.0,
                    &[1.0, 5.0],
                    QuadOptions::new(1e-14, 1e-13),
                );
                let (f, _) = rational_inverse(k, kappa, x);
                if k == 1 && x > 0.0 {
                    // slowly convergent oscillatory tail; looser check
                    assert!((f - q.value).abs() < 1e-6);
                } else {
                    assert!(
                        (f - q.value).abs() < 1e-10,
                        "k = {k}, x = {x}: {f} vs {}",
                        q.value
                    );
                }
                let h = 1e-5;
                if x > h {
                    let fd = (rational_inverse(k, kappa, x + h).0
                        - rational_inverse(k, kappa, x - h).0)
                        / (2.0 * h);
                    assert!((fd - rational_inverse(k, kappa, x).1).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn asymptote_constant_is_the_singular_mass() {
        let p = unit();
        let o = FourierOracle::new(3.0, &p, &QuadratureConfig::default()).unwrap();
        assert_relative_eq!(o.delta_weight(), (-3f64).exp(), max_relative = 1e-15);
    }

    #[test]
    fn fourier_mass_and_parity() {
        let p = unit();
        let t = 5.0;
        let cfg = QuadratureConfig::default();
        let o = FourierOracle::new(t, &p, &cfg).unwrap();
        let opts = QuadOptions::new(1e-12, 1e-11);
        let m = integrate(
            |x: f64| o.smooth(x),
            -60.0,
            60.0,
            QuadOptions {
                max_intervals: 400,
                ..opts
            },
        )
        .value;
        assert!((m.get(0, 0) + o.delta_weight() - 1.0).abs() < 1e-6);
        assert!(m.get(0, 1).abs() < 1e-6);
        for x in [0.4, 3.0, 7.5] {
            let (a, b) = (o.smooth(x), o.smooth(-x));
            assert!((a.get(0, 0) - b.get(0, 0)).abs() < 1e-14);
            assert!((a.get(1, 1) - b.get(1, 1)).abs() < 1e-14);
            assert!((a.get(0, 1) + b.get(0, 1)).abs() < 1e-14);
            assert!((a.get(1, 0) + b.get(1, 0)).abs() < 1e-14);
        }
    }

    #[test]
    fn fourier_and_laplace_oracles_agree() {
        let p = ModelParams::mixed(1.0, 0.7, 1.0).unwrap();
        let cfg = QuadratureConfig::default();
        for t in [0.5, 2.0, 6.0] {
            let o = FourierOracle::new(t, &p, &cfg).unwrap();
            for x in [-9.0, -1.5, 0.3, 2.0, 5.0, 12.0] {
                let (f, err) = o.smooth_with_error(x);
                let l = invert_laplace_fundamental(x, t, &p, &cfg).unwrap();
                let scale = 1.0 / (2.0 * PI * p.nu * t).sqrt();
                assert!(err < 1e-9 * scale, "t = {t}, x = {x}: err {err}");
                assert!(
                    (f - l).max_abs() < 1e-8 * scale,
                    "t = {t}, x = {x}: {f:?} vs {l:?}"
                );
            }
        }
    }

    #[test]
    fn leading_order_is_close_at_late_times() {
        let p = unit();
        let t = 20.0;
        let o = FourierOracle::new(t, &p, &QuadratureConfig::default()).unwrap();
        let scale = 1.0 / (2.0 * PI * t).sqrt();
        for x in [-20.0, -5.0, 0.5, 18.0, 20.0, 23.0] {
            let d = (o.smooth(x) - fundamental_smooth(x, t, &p)).max_abs();
            assert!(d < 0.2 * scale, "x = {x}: {d}");
        }
    }

    #[test]
    fn contours_agree_and_are_real() {
        let p = unit();
        let cfg = QuadratureConfig::default();
        let inv = invert_laplace_green_detailed(3.0, 5.0, 4.0, &p, &cfg).unwrap();
        let scale = 1.0 / (2.0 * PI * 4.0f64).sqrt();
        assert!(inv.error_estimate < 1e-8 * scale, "{inv:?}");
        assert!(inv.imag_residue < 1e-9 * inv.value.max_abs());
        let line = QuadratureConfig {
            contour: ContourKind::ShiftedLine,
            check_contour: Some(ContourKind::Parabolic),
            tol: 1e-6,
            ..cfg
        };
        let l = invert_laplace_green_detailed(3.0, 5.0, 4.0, &p, &line).unwrap();
        assert!(
            (l.value - inv.value).max_abs() < 1e-6 * scale,
            "{l:?} vs {inv:?}"
        );
    }

    #[test]
    fn dirichlet_laplace_matches_image_formula() {
        let p = ModelParams::dirichlet(1.0, 1.0).unwrap();
        let cfg = QuadratureConfig::default();
        let t = 5.0;
        let o = FourierOracle::new(t, &p, &cfg).unwrap();
        for (x, y) in [(1.0, 4.0), (7.0, 2.0), (12.0, 15.0)] {
            let l = invert_laplace_green(x, y, t, &p, &cfg).unwrap();
            let f = o.smooth(x - y) + o.smooth(x + y) * Matrix2::FLIP;
            assert!((l - f).max_abs() < 1e-6 * f.max_abs());
        }
    }

    #[test]
    fn unstable_contour_must_pass_right_of_pole() {
        let u = ModelParams::new(1.0, 1.0, 1.0, 1.0).unwrap();
        let cfg = QuadratureConfig {
            abscissa: Some(1.0),
            ..Default::default()
        };
        assert!(matches!(
            invert_laplace_green(1.0, 2.0, 1.0, &u, &cfg),
            Err(Error::Configuration(_))
        ));
        let g = invert_laplace_green(1.0, 2.0, 1.0, &u, &QuadratureConfig::default()).unwrap();
        assert!(g.is_finite());
    }

    #[test]
    fn mirror_quadrature_solves_boundary_ode() {
        let p = unit();
        let t = 5.0;
        let o = FourierOracle::new(t, &p, &QuadratureConfig::default()).unwrap();
        let gamma = 1.0;
        let g = |w: f64| boundary_moment(&o, w, gamma, &p, 1e-10).unwrap();
        for w in [1.0, 4.0, 9.0] {
            let h = 1e-2;
            let dg = (g(w + h) - g(w - h)).scale(0.5 / h);
            // (a2 + a1 d/dw) g = 2 a2 G with a1 = -1, a2 = gamma
            let res = (g(w).scale(p.a2) + dg.scale(p.a1) - o.smooth(w).scale(2.0 * p.a2)).max_abs();
            assert!(
                res < 1e-4 * o.smooth(w).max_abs().max(1e-3),
                "w = {w}: {res}"
            );
        }
    }

    #[test]
    fn mirror_quadrature_vs_leading_order() {
        let p = unit();
        let t = 5.0;
        let cfg = QuadratureConfig::default();
        let o = FourierOracle::new(t, &p, &cfg).unwrap();
        let scale = 1.0 / (2.0 * PI * t).sqrt();
        for w in [0.0, 2.0, 5.0, 8.0, 15.0] {
            let q = mirror_with_oracle(&o, w, &p, 1e-10).unwrap();
            let l = mirror_leading(w, t, &p).unwrap();
            assert!((q - l).max_abs() < 0.25 * scale, "w = {w}: {q:?} vs {l:?}");
        }
    }
}
