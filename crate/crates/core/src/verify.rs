//! Verification harnesses.
//!
//! Bounds with unspecified constants are checked as sup ratios: the supremum
//! of `computed / envelope` over a grid must be finite and move by at most
//! [`STABILITY_TOL`] (relative) under one 2x refinement of the grid. Decay
//! and growth statements are checked by log-linear fits.
//!
//! All sweeps run in parallel but reduce in grid order, so reports are
//! reproducible bit for bit.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::envelope::{psi, theta, BoundEnvelope};
use crate::error::{Error, Result};
use crate::field::{FieldState, Grid1D, Trajectory};
use crate::matrix::Matrix2;
use crate::params::{BoundaryClass, ModelParams};
use crate::quadrature::{integrate_to_infinity, integrate_with_breaks, QuadOptions};
use crate::solver::{
    green_column, make_initial_data, solve_linear, Components, InitialData, InitialProfile,
    SolverConfig,
};
use crate::spectral::find_boundary_pole;
use crate::transforms::{invert_laplace_green, invert_laplace_green_detailed, QuadratureConfig};

/// Largest relative change of a sup ratio under refinement that still
/// counts as stable.
pub const STABILITY_TOL: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

/// Uniform sample of `[lo, hi]` with `n` points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, n: usize) -> Self {
        Axis { lo, hi, n }
    }

    pub fn points(&self) -> Vec<f64> {
        if self.n == 1 {
            return vec![self.lo];
        }
        let h = (self.hi - self.lo) / (self.n - 1) as f64;
        (0..self.n).map(|i| self.lo + h * i as f64).collect()
    }

    /// Halves the spacing; every coarse point is kept.
    pub fn refined(&self) -> Axis {
        Axis {
            n: 2 * self.n - 1,
            ..*self
        }
    }

    fn validate(&self, name: &str) -> Result<()> {
        if self.n == 0 || !(self.hi >= self.lo) || !self.lo.is_finite() || !self.hi.is_finite() {
            return Err(Error::param(format!("invalid {name} axis {self:?}")));
        }
        Ok(())
    }

    fn describe(&self) -> String {
        format!("[{}, {}] x {}", self.lo, self.hi, self.n)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupRatio {
    pub coarse: f64,
    pub fine: f64,
    /// `(x, y or s, t)` of the fine-grid supremum.
    pub location: [f64; 3],
    pub tolerance: f64,
}

impl SupRatio {
    pub fn relative_change(&self) -> f64 {
        (self.fine - self.coarse).abs() / self.coarse
    }

    pub fn stable(&self) -> bool {
        self.coarse > 0.0
            && self.coarse.is_finite()
            && self.fine.is_finite()
            && self.relative_change() <= self.tolerance
    }
}

/// Least-squares slope of `log q` against `log(1 + t)` (or `t`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub label: String,
    pub slope: f64,
    pub std_error: f64,
    pub target: Option<f64>,
    pub tolerance: f64,
    pub t_range: (f64, f64),
    pub samples: usize,
}

impl ExponentFit {
    pub fn within(&self) -> bool {
        self.slope.is_finite()
            && self
                .target
                .map_or(true, |t| (self.slope - t).abs() <= self.tolerance)
    }

    /// Two-standard-error band around the slope.
    pub fn band(&self) -> (f64, f64) {
        (
            self.slope - 2.0 * self.std_error,
            self.slope + 2.0 * self.std_error,
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Bound {
    AtMost,
    AtLeast,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub bound: Bound,
}

impl Check {
    pub fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Check {
            name: name.into(),
            value,
            limit,
            bound: Bound::AtMost,
        }
    }

    pub fn at_least(name: &str, value: f64, limit: f64) -> Self {
        Check {
            name: name.into(),
            value,
            limit,
            bound: Bound::AtLeast,
        }
    }

    pub fn holds(&self) -> bool {
        match self.bound {
            Bound::AtMost => self.value <= self.limit,
            Bound::AtLeast => self.value >= self.limit,
        }
    }
}

/// One row of a per-node ratio table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub x: f64,
    pub y: Option<f64>,
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub name: String,
    pub parameters: serde_json::Value,
    pub status: Status,
    /// Set when the numbers cannot support a verdict.
    pub inconclusive: Option<String>,
    pub sup_ratio: Option<SupRatio>,
    pub fits: Vec<ExponentFit>,
    pub checks: Vec<Check>,
    /// Informational numbers that do not enter the verdict.
    pub metrics: BTreeMap<String, f64>,
    pub grid_levels: Vec<String>,
    pub log: Vec<String>,
    pub artifacts: Vec<String>,
    #[serde(skip)]
    pub rows: Vec<RatioRow>,
}

impl VerificationReport {
    pub fn new(name: &str, parameters: serde_json::Value) -> Self {
        VerificationReport {
            name: name.into(),
            parameters,
            status: Status::Inconclusive,
            inconclusive: None,
            sup_ratio: None,
            fits: Vec::new(),
            checks: Vec::new(),
            metrics: BTreeMap::new(),
            grid_levels: Vec::new(),
            log: Vec::new(),
            artifacts: Vec::new(),
            rows: Vec::new(),
        }
    }

    /// Verdict from the recorded numbers alone.
    pub fn evaluate(&self) -> Status {
        if self.inconclusive.is_some() {
            return Status::Inconclusive;
        }
        let ok = self.sup_ratio.map_or(true, |s| s.stable())
            && self.fits.iter().all(ExponentFit::within)
            && self.checks.iter().all(Check::holds);
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }

    pub fn finish(mut self) -> Self {
        self.status = self.evaluate();
        self
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    pub fn metric(&mut self, key: &str, value: f64) {
        self.metrics.insert(key.into(), value);
    }

    /// Writes the ratio table (`x,y,t,lhs,rhs,ratio`) and records the path.
    pub fn write_table(&mut self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["x", "y", "t", "lhs", "rhs", "ratio"])?;
        let f = |v: f64| format!("{v:.16e}");
        for r in &self.rows {
            w.write_record([
                f(r.x),
                r.y.map(f).unwrap_or_default(),
                f(r.t),
                f(r.lhs),
                f(r.rhs),
                f(r.ratio),
            ])?;
        }
        w.flush()?;
        self.artifacts.push(path.display().to_string());
        Ok(())
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(file), self)?;
        Ok(())
    }
}

/// Least-squares line through `(xs, ys)`: slope, intercept, slope standard error.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let se = if xs.len() > 2 {
        (rss / (n - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    (slope, intercept, se)
}

/// One grid point of a sweep: `None` if skipped.
struct Sample {
    lhs: f64,
    rhs: f64,
    accurate: bool,
}

struct Level {
    sup: f64,
    location: [f64; 3],
    rows: Vec<RatioRow>,
    skipped: usize,
    inaccurate: usize,
}

fn sweep<F>(points: &[[f64; 3]], has_y: bool, f: F) -> Level
where
    F: Fn([f64; 3]) -> Option<Sample> + Sync,
{
    let samples: Vec<Option<Sample>> = points.par_iter().map(|pt| f(*pt)).collect();
    let mut level = Level {
        sup: 0.0,
        location: [f64::NAN; 3],
        rows: Vec::with_capacity(points.len()),
        skipped: 0,
        inaccurate: 0,
    };
    for (pt, s) in points.iter().zip(samples) {
        let Some(s) = s else {
            level.skipped += 1;
            continue;
        };
        if !s.accurate {
            level.inaccurate += 1;
        }
        let ratio = s.lhs / s.rhs;
        if ratio > level.sup || ratio.is_nan() {
            level.sup = if ratio.is_nan() { f64::INFINITY } else { ratio };
            level.location = *pt;
        }
        level.rows.push(RatioRow {
            x: pt[0],
            y: has_y.then_some(pt[1]),
            t: pt[2],
            lhs: s.lhs,
            rhs: s.rhs,
            ratio,
        });
    }
    level
}

fn two_level<F>(
    report: &mut VerificationReport,
    coarse: Vec<[f64; 3]>,
    fine: Vec<[f64; 3]>,
    has_y: bool,
    f: F,
) where
    F: Fn([f64; 3]) -> Option<Sample> + Sync,
{
    let a = sweep(&coarse, has_y, &f);
    let b = sweep(&fine, has_y, &f);
    let inaccurate = a.inaccurate + b.inaccurate;
    if inaccurate > 0 {
        report.inconclusive = Some(format!(
            "{inaccurate} oracle evaluations missed the requested accuracy"
        ));
    }
    if a.skipped + b.skipped > 0 {
        report.log.push(format!(
            "skipped {} coarse and {} fine points (singular or outside the stencil domain)",
            a.skipped, b.skipped
        ));
    }
    report.sup_ratio = Some(SupRatio {
        coarse: a.sup,
        fine: b.sup,
        location: b.location,
        tolerance: STABILITY_TOL,
    });
    report.metric("sup_ratio_coarse", a.sup);
    report.metric("sup_ratio_fine", b.sup);
    report.rows = b.rows;
}

// ---------------------------------------------------------------------------
// Green's function envelope

/// Sampling grid for the Green's function bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GreenGrid {
    pub x: Axis,
    pub y: Axis,
    pub t: Axis,
}

impl Default for GreenGrid {
    fn default() -> Self {
        GreenGrid {
            x: Axis::new(0.0, 25.0, 26),
            y: Axis::new(0.0, 25.0, 26),
            t: Axis::new(1.0, 20.0, 20),
        }
    }
}

impl GreenGrid {
    fn product(x: &Axis, y: &Axis, t: &Axis) -> Vec<[f64; 3]> {
        let (xs, ys, ts) = (x.points(), y.points(), t.points());
        let mut v = Vec::with_capacity(xs.len() * ys.len() * ts.len());
        for &t in &ts {
            for &y in &ys {
                for &x in &xs {
                    v.push([x, y, t]);
                }
            }
        }
        v
    }

    pub fn points(&self) -> Vec<[f64; 3]> {
        Self::product(&self.x, &self.y, &self.t)
    }

    pub fn refined(&self) -> GreenGrid {
        GreenGrid {
            x: self.x.refined(),
            y: self.y.refined(),
            t: self.t.refined(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ridge {
    /// `x - y = c t`
    Right,
    /// `x - y = -c t`
    Left,
    /// `x + y = c t`
    Reflected,
}

/// Nearest acoustic ridge and the distance to it in units of `sqrt(nu t)`.
pub fn nearest_ridge(p: &ModelParams, x: f64, y: f64, t: f64) -> (Ridge, f64) {
    let w = (p.nu * t).sqrt();
    let ct = p.c * t;
    [
        (Ridge::Right, (x - y - ct).abs()),
        (Ridge::Left, (x - y + ct).abs()),
        (Ridge::Reflected, (x + y - ct).abs()),
    ]
    .into_iter()
    .map(|(r, d)| (r, d / w))
    .min_by(|a, b| a.1.total_cmp(&b.1))
    .unwrap()
}

/// `d/dx` of the smooth Green's function by fourth-order differences with
/// step `sqrt(nu t)/20`, one-sided where the central stencil would leave the
/// half line or straddle the source. Returns the derivative and the largest
/// relative oracle error, or `None` when no stencil fits.
fn green_dx(
    x: f64,
    y: f64,
    t: f64,
    p: &ModelParams,
    q: &QuadratureConfig,
) -> Option<Result<(Matrix2, f64)>> {
    let h = (p.nu * t).sqrt() / 20.0;
    let straddles = |lo: f64, hi: f64| y >= lo && y <= hi;
    let (offsets, weights): (&[f64], &[f64]) =
        if x - 2.0 * h >= 0.0 && !straddles(x - 2.0 * h, x + 2.0 * h) {
            (&[-2.0, -1.0, 1.0, 2.0], &[1.0, -8.0, 8.0, -1.0])
        } else if !straddles(x, x + 4.0 * h) {
            (
                &[0.0, 1.0, 2.0, 3.0, 4.0],
                &[-25.0, 48.0, -36.0, 16.0, -3.0],
            )
        } else if x - 4.0 * h >= 0.0 && !straddles(x - 4.0 * h, x) {
            (
                &[0.0, -1.0, -2.0, -3.0, -4.0],
                &[25.0, -48.0, 36.0, -16.0, 3.0],
            )
        } else {
            return None;
        };
    let mut acc = Matrix2::default();
    let mut worst = 0.0f64;
    for (o, w) in offsets.iter().zip(weights) {
        let inv = match invert_laplace_green_detailed(x + o * h, y, t, p, q) {
            Ok(v) => v,
            Err(e) => return Some(Err(e)),
        };
        worst = worst.max(inv.relative_error(t, p));
        acc += (w / (12.0 * h)) * inv.value;
    }
    Some(Ok((acc, worst)))
}

/// Sup of `max_ij |d^alpha G_ij| / envelope` over the grid and its 2x
/// refinement, with `G` from contour inversion of the Laplace transform.
pub fn green_bound_report(
    p: &ModelParams,
    grid: &GreenGrid,
    alpha: u32,
    envelope: &BoundEnvelope,
    q: &QuadratureConfig,
) -> Result<VerificationReport> {
    if !p.boundary_class().is_stable() {
        return Err(Error::usage(format!(
            "the Green's function bound needs a stable boundary class, got {}",
            p.boundary_class()
        )));
    }
    if alpha > 1 {
        return Err(Error::param(format!(
            "derivative order {alpha} not in {{0, 1}}"
        )));
    }
    grid.x.validate("x")?;
    grid.y.validate("y")?;
    grid.t.validate("t")?;
    if !(grid.t.lo > 0.0) || grid.x.lo < 0.0 || grid.y.lo < 0.0 {
        return Err(Error::param("the grid must satisfy x, y >= 0 and t > 0"));
    }
    q.validate()?;
    let env = envelope.with_alpha(alpha);
    env.validate()?;

    let mut report = VerificationReport::new(
        &format!("green-bound-alpha{alpha}"),
        serde_json::json!({
            "params": p, "alpha": alpha, "envelope": env, "grid": grid, "quadrature": q,
        }),
    );
    report.grid_levels = vec![
        format!(
            "x {} y {} t {}",
            grid.x.describe(),
            grid.y.describe(),
            grid.t.describe()
        ),
        {
            let f = grid.refined();
            format!(
                "x {} y {} t {}",
                f.x.describe(),
                f.y.describe(),
                f.t.describe()
            )
        },
    ];
    let tol = q.tol;
    let eval = |pt: [f64; 3]| -> Option<Sample> {
        let [x, y, t] = pt;
        if x == y {
            return None;
        }
        let (g, err) = if alpha == 0 {
            match invert_laplace_green_detailed(x, y, t, p, q) {
                Ok(inv) => (inv.value, inv.relative_error(t, p)),
                Err(_) => {
                    return Some(Sample {
                        lhs: f64::NAN,
                        rhs: 1.0,
                        accurate: false,
                    })
                }
            }
        } else {
            match green_dx(x, y, t, p, q)? {
                Ok(v) => v,
                Err(_) => {
                    return Some(Sample {
                        lhs: f64::NAN,
                        rhs: 1.0,
                        accurate: false,
                    })
                }
            }
        };
        Some(Sample {
            lhs: g.max_abs(),
            rhs: env.green(p, x, y, t),
            accurate: err <= tol,
        })
    };
    two_level(
        &mut report,
        grid.points(),
        grid.refined().points(),
        true,
        eval,
    );

    let sup = report.sup_ratio.unwrap();
    let [x, y, t] = sup.location;
    if x.is_finite() {
        let (ridge, dist) = nearest_ridge(p, x, y, t);
        report.log.push(format!(
            "sup at x = {x}, y = {y}, t = {t}: nearest ridge {ridge:?} at {dist:.3} widths"
        ));
        report.metric("ridge_distance_widths", dist);
        report
            .checks
            .push(Check::at_most("sup_on_ridge_widths", dist, 3.0));
    }
    Ok(report.finish())
}

/// Relative difference at `(x, t)` between the two columns of the Green's
/// function evolved by the solver from a Gaussian pulse at `y` and the
/// contour-inversion oracle.
pub fn green_column_cross_check(
    p: &ModelParams,
    x: f64,
    y: f64,
    t: f64,
    width: f64,
    cfg: &SolverConfig,
    q: &QuadratureConfig,
) -> Result<f64> {
    let mut c = cfg.clone();
    c.t_end = t;
    c.output_times.clear();
    let j = c.grid.nearest(x);
    let xj = c.grid.x(j);
    let a = green_column(y, 0, width, p, &c)?;
    let b = green_column(y, 1, width, p, &c)?;
    let (a, b) = (a.last().unwrap(), b.last().unwrap());
    let numeric = Matrix2::new(a.rho[j], b.rho[j], a.m[j], b.m[j]);
    let oracle = invert_laplace_green(xj, y, t, p, q)?;
    Ok((numeric - oracle).max_abs() / oracle.max_abs())
}

// ---------------------------------------------------------------------------
// Instability

/// Sup norm of `m` at every snapshot.
pub fn sup_norm_series(traj: &Trajectory) -> Vec<(f64, f64)> {
    traj.snapshots
        .iter()
        .map(|s| (s.t, s.max_abs_m()))
        .collect()
}

/// Measures the exponential growth rate of `|m|_inf` for an unstable
/// boundary and compares it with the real part of the boundary pole.
pub fn instability_report(p: &ModelParams, cfg: &SolverConfig) -> Result<VerificationReport> {
    if p.boundary_class() != BoundaryClass::MixedUnstable {
        return Err(Error::usage(format!(
            "instability_report needs a1 a2 > 0; these coefficients are {}",
            p.boundary_class()
        )));
    }
    let pole = find_boundary_pole(p)
        .ok_or_else(|| Error::Inconclusive("no boundary pole found".into()))?;
    let mut c = cfg.clone();
    c.allow_unstable = true;
    let n_out = 60;
    c.output_times = (1..=n_out)
        .map(|k| c.t_end * k as f64 / n_out as f64)
        .collect();
    let init = make_initial_data(
        &InitialData::new(
            InitialProfile::Bump {
                amplitude: 1e-6,
                center: 3.0,
                half_width: 1.0,
            },
            Components::Both,
        ),
        &c.grid,
        p,
    )?;
    let traj = solve_linear(&init, p, &c)?;

    let mut report = VerificationReport::new(
        "instability",
        serde_json::json!({ "params": p, "solver": c }),
    );
    report.grid_levels = vec![format!("dx = {}, L = {}", c.grid.dx(), c.grid.length)];
    let t0 = 0.5 * c.t_end;
    let far = 0.8 * c.grid.length;
    let (mut ts, mut ys) = (Vec::new(), Vec::new());
    let mut contamination = 0.0f64;
    for s in traj.snapshots.iter().filter(|s| s.t >= t0) {
        let sup = s.max_abs_m();
        let tail = (0..c.grid.nodes())
            .filter(|&j| c.grid.x(j) >= far)
            .fold(0.0f64, |a, j| a.max(s.m[j].abs()));
        contamination = contamination.max(tail / sup);
        ts.push(s.t);
        ys.push(sup.ln());
    }
    let (slope, _, se) = fit_line(&ts, &ys);
    let target = pole.re;
    report.fits.push(ExponentFit {
        label: "log |m|_inf vs t".into(),
        slope,
        std_error: se,
        target: Some(target),
        tolerance: 0.05 * target,
        t_range: (t0, c.t_end),
        samples: ts.len(),
    });
    report.metric("pole_re", target);
    report.metric("pole_im", pole.im);
    report.metric("measured_rate", slope);
    report.metric("relative_error", (slope - target).abs() / target);
    report.metric("far_field_fraction", contamination);
    if contamination > 1e-3 {
        report.inconclusive = Some(format!(
            "far-field amplitude is {contamination:.2e} of the sup norm inside the fit window"
        ));
    }
    Ok(report.finish())
}

// ---------------------------------------------------------------------------
// Ansatz norm and decay

/// Pointwise `|U|` and `|U_x|` (central differences, one-sided at the ends).
fn magnitude_and_gradient(s: &FieldState, grid: &Grid1D) -> (Vec<f64>, Vec<f64>) {
    let n = grid.nx;
    let h = grid.dx();
    let d = |v: &[f64], j: usize| -> f64 {
        if j == 0 {
            (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h)
        } else if j == n {
            (3.0 * v[n] - 4.0 * v[n - 1] + v[n - 2]) / (2.0 * h)
        } else {
            (v[j + 1] - v[j - 1]) / (2.0 * h)
        }
    };
    let u: Vec<f64> = s.perturbation();
    let du = (0..=n).map(|j| d(&s.rho, j).hypot(d(&s.m, j))).collect();
    (u, du)
}

/// Running supremum `M(T)` of `|U / A0|_inf + (t+1)^(1/4) |U_x / A0|_inf`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnsatzSeries {
    pub times: Vec<f64>,
    pub instantaneous: Vec<f64>,
    pub running: Vec<f64>,
}

pub fn ansatz_m(traj: &Trajectory, p: &ModelParams) -> Result<AnsatzSeries> {
    let grid = traj.grid()?;
    let mut out = AnsatzSeries {
        times: Vec::new(),
        instantaneous: Vec::new(),
        running: Vec::new(),
    };
    let mut run = 0.0f64;
    for s in &traj.snapshots {
        let (u, du) = magnitude_and_gradient(s, &grid);
        let w = (s.t + 1.0).powf(0.25);
        let (mut a, mut b) = (0.0f64, 0.0f64);
        for j in 0..grid.nodes() {
            let env = crate::envelope::a0(grid.x(j), s.t, p.c);
            a = a.max(u[j] / env);
            b = b.max(w * du[j] / env);
        }
        run = run.max(a + b);
        out.times.push(s.t);
        out.instantaneous.push(a + b);
        out.running.push(run);
    }
    Ok(out)
}

/// Relative increase of a running supremum over the last quarter of the run.
fn final_quarter_increase(times: &[f64], running: &[f64]) -> f64 {
    let Some(&t_end) = times.last() else {
        return 0.0;
    };
    let cut = 0.75 * t_end;
    let before = times
        .iter()
        .zip(running)
        .filter(|(t, _)| **t <= cut)
        .map(|(_, m)| *m)
        .fold(0.0f64, f64::max);
    let last = *running.last().unwrap();
    if before == 0.0 {
        return if last == 0.0 { 0.0 } else { f64::INFINITY };
    }
    (last - before) / before
}

impl AnsatzSeries {
    pub fn final_quarter_increase(&self) -> f64 {
        final_quarter_increase(&self.times, &self.running)
    }

    pub fn report(&self, params: &ModelParams) -> VerificationReport {
        let mut r = VerificationReport::new("ansatz", serde_json::json!({ "params": params }));
        r.metric("m_final", self.running.last().copied().unwrap_or(0.0));
        r.checks.push(Check::at_most(
            "final_quarter_increase",
            self.final_quarter_increase(),
            0.05,
        ));
        r.finish()
    }
}

/// Log-log fits of `|U(t)|_p` against `1 + t` for each `p` (`inf` allowed,
/// `p <= 1` refused) over the snapshots in `window` (default: the last
/// decade of the run), plus the weighted sup-norm
/// `sup_x |U| [(x - c(t+1))^2 + (t+1)]^(1/2)`.
pub fn decay_report(
    traj: &Trajectory,
    p: &ModelParams,
    p_list: &[f64],
    window: Option<(f64, f64)>,
) -> Result<VerificationReport> {
    if let Some(&bad) = p_list.iter().find(|&&q| !(q > 1.0)) {
        return Err(Error::usage(format!(
            "decay exponents are defined for p in (1, inf]; got p = {bad}"
        )));
    }
    let grid = traj.grid()?;
    let t_max = traj.last().map_or(0.0, |s| s.t);
    let (lo, hi) = window.unwrap_or((0.1 * t_max, t_max));
    let snaps: Vec<&FieldState> = traj
        .snapshots
        .iter()
        .filter(|s| s.t >= lo - 1e-12 && s.t <= hi + 1e-12 && s.t > 0.0)
        .collect();
    let mut report = VerificationReport::new(
        "decay",
        serde_json::json!({ "params": p, "p": p_list.iter().map(|q| if q.is_infinite() { "inf".to_string() } else { q.to_string() }).collect::<Vec<_>>(), "window": [lo, hi] }),
    );
    report.grid_levels = vec![format!("dx = {}, L = {}", grid.dx(), grid.length)];
    let span = snaps.last().map_or(0.0, |s| s.t) / snaps.first().map_or(f64::INFINITY, |s| s.t);
    if snaps.len() < 3 || !(span >= 10.0 - 1e-9) {
        report.inconclusive = Some(format!(
            "fit window covers a factor {span:.2} in time (one decade needed) with {} snapshots",
            snaps.len()
        ));
        return Ok(report.finish());
    }
    let logt: Vec<f64> = snaps.iter().map(|s| (1.0 + s.t).ln()).collect();
    let mut slopes = Vec::new();
    for &q in p_list {
        let ys: Vec<f64> = snaps
            .iter()
            .map(|s| s.perturbation_norm(&grid, q).ln())
            .collect();
        let (slope, _, se) = fit_line(&logt, &ys);
        let target = -0.5 * (1.0 - 1.0 / q);
        slopes.push((q, slope));
        report.fits.push(ExponentFit {
            label: if q.is_infinite() {
                "L^inf".into()
            } else {
                format!("L^{q}")
            },
            slope,
            std_error: se,
            target: Some(target),
            tolerance: 0.1,
            t_range: (snaps[0].t, snaps[snaps.len() - 1].t),
            samples: snaps.len(),
        });
    }
    let mut sorted = slopes.clone();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let monotone = sorted.windows(2).all(|w| w[1].1 < w[0].1);
    report.checks.push(Check::at_least(
        "slopes_monotone_in_p",
        monotone as u8 as f64,
        1.0,
    ));

    // Weighted sup norms over the whole run.
    let (mut times, mut w0, mut w1) = (Vec::new(), Vec::new(), Vec::new());
    let (mut r0, mut r1) = (0.0f64, 0.0f64);
    let (mut dt, mut dn) = (Vec::new(), Vec::new());
    for s in &traj.snapshots {
        let (u, du) = magnitude_and_gradient(s, &grid);
        let tp = s.t + 1.0;
        let (mut a, mut b) = (0.0f64, 0.0f64);
        for j in 0..grid.nodes() {
            let z = grid.x(j) - p.c * tp;
            let weight = (z * z + tp).sqrt();
            a = a.max(u[j] * weight);
            b = b.max(du[j] * weight * tp.powf(0.25));
        }
        r0 = r0.max(a);
        r1 = r1.max(b);
        times.push(s.t);
        w0.push(r0);
        w1.push(r1);
        if s.t >= snaps[0].t && s.t <= snaps[snaps.len() - 1].t {
            dt.push(tp.ln());
            dn.push(du.iter().fold(0.0f64, |m, v| m.max(*v)).ln());
        }
    }
    report.checks.push(Check::at_most(
        "weighted_sup_final_quarter_increase",
        final_quarter_increase(&times, &w0),
        0.05,
    ));
    report.metric("weighted_sup", r0);
    report.metric("weighted_sup_derivative", r1);
    report.metric(
        "weighted_sup_derivative_final_quarter_increase",
        final_quarter_increase(&times, &w1),
    );
    let (ds, _, _) = fit_line(&dt, &dn);
    report.metric("derivative_sup_slope", ds);
    report
        .log
        .push(format!("measured |U_x|_inf decay exponent {ds:.4}"));
    Ok(report.finish())
}

// ---------------------------------------------------------------------------
// Convolution estimates

/// `(x, t)` sampling grid for the convolution checks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LemmaGrid {
    pub x: Axis,
    pub t: Axis,
}

impl LemmaGrid {
    fn points(x: &Axis, t: &Axis) -> Vec<[f64; 3]> {
        let mut v = Vec::new();
        for &t in &t.points() {
            for &x in &x.points() {
                v.push([x, f64::NAN, t]);
            }
        }
        v
    }

    fn validate(&self) -> Result<()> {
        self.x.validate("x")?;
        self.t.validate("t")?;
        if self.t.lo < 0.0 {
            return Err(Error::param("times must be non-negative"));
        }
        Ok(())
    }
}

/// `int exp(-(x-y)^2 / (D0 (t+1))) / sqrt(t+1) (1+y^2)^(-r) dy` over the line.
pub fn initial_data_integral(x: f64, t: f64, d0: f64, r: f64) -> f64 {
    let tp = t + 1.0;
    let f = |y: f64| (-(x - y).powi(2) / (d0 * tp)).exp() / tp.sqrt() * (1.0 + y * y).powf(-r);
    let width = (d0 * tp).sqrt();
    let opts = QuadOptions::new(1e-300, 1e-11);
    let breaks = |c: f64| -> Vec<f64> {
        let mut b = vec![c + 4.0 * width, c + 8.0 * width];
        if c < 0.0 {
            b.push(0.0);
        }
        b.sort_by(f64::total_cmp);
        b
    };
    let right = integrate_to_infinity(f, x, &breaks(x), opts).value;
    let left = integrate_to_infinity(|u: f64| f(-u), -x, &breaks(-x), opts).value;
    left + right
}

/// Sup over the grid of the initial-data integral divided by
/// `exp(-x^2/(E(t+1)))/sqrt(t+1) + (t+1+x^2)^(-r)`.
pub fn lemma_initial_data_check(
    d0: f64,
    r: f64,
    e_const: f64,
    grid: &LemmaGrid,
) -> Result<VerificationReport> {
    if !(d0 > 0.0) || !(r > 0.5) || !(e_const > d0) {
        return Err(Error::param(format!(
            "needs D0 > 0, r > 1/2 and E > D0 (got D0 = {d0}, r = {r}, E = {e_const})"
        )));
    }
    grid.validate()?;
    let mut report = VerificationReport::new(
        "initial-data",
        serde_json::json!({ "d0": d0, "r": r, "e": e_const, "grid": grid }),
    );
    report.grid_levels = vec![
        format!("x {} t {}", grid.x.describe(), grid.t.describe()),
        format!(
            "x {} t {}",
            grid.x.refined().describe(),
            grid.t.refined().describe()
        ),
    ];
    let rhs = |x: f64, t: f64| {
        let tp = t + 1.0;
        (-x * x / (e_const * tp)).exp() / tp.sqrt() + (tp + x * x).powf(-r)
    };
    let eval = |pt: [f64; 3]| {
        let [x, _, t] = pt;
        Some(Sample {
            lhs: initial_data_integral(x, t, d0, r),
            rhs: rhs(x, t),
            accurate: true,
        })
    };
    let coarse = LemmaGrid::points(&grid.x, &grid.t);
    let fine = LemmaGrid::points(&grid.x.refined(), &grid.t.refined());
    two_level(&mut report, coarse, fine, false, eval);

    // Core region |x| <= sqrt(t+1): I sqrt(t+1) stays O(1).
    let core = report
        .rows
        .iter()
        .filter(|row| row.x.abs() <= (row.t + 1.0).sqrt())
        .map(|row| row.lhs * (row.t + 1.0).sqrt())
        .fold(0.0f64, f64::max);
    report.metric("core_sup_scaled", core);
    // The Gaussian is at most 1, so I sqrt(t+1) <= int (1+y^2)^(-r) dy.
    let o = QuadOptions::new(1e-300, 1e-12);
    let bound =
        2.0 * integrate_to_infinity(|y: f64| (1.0 + y * y).powf(-r), 0.0, &[1.0, 10.0], o).value;
    report.metric("core_bound", bound);
    report
        .checks
        .push(Check::at_most("core_scaled_by_mass", core, bound));
    Ok(report.finish())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InteractionKind {
    SameSpeed,
    CrossSpeed,
}

/// Parameters of a space-time convolution of a heat kernel travelling at
/// `lambda` against the algebraic profile `psi^(3/2)` travelling at
/// `lambda_prime`:
///
/// `int_0^t int (t-s)^(-(a-a')/2) (t-s+1)^(-a'/2) exp(-(x-y-lambda(t-s))^2 / (nu (t-s)))
///    (s+1)^(-beta/2) psi^(3/2)(y, s; lambda') dy ds`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveInteraction {
    pub kind: InteractionKind,
    pub alpha: f64,
    pub alpha_prime: f64,
    pub beta: f64,
    pub nu: f64,
    pub lambda: f64,
    pub lambda_prime: f64,
    /// Variance widening of the Gaussian terms on the right-hand side.
    pub eps: f64,
    /// Width constant of the zone between the two rays (cross speed only).
    pub k_zone: f64,
}

impl WaveInteraction {
    pub fn same_speed(alpha: f64, alpha_prime: f64, beta: f64, nu: f64, lambda: f64) -> Self {
        WaveInteraction {
            kind: InteractionKind::SameSpeed,
            alpha,
            alpha_prime,
            beta,
            nu,
            lambda,
            lambda_prime: lambda,
            eps: 0.5 * nu,
            k_zone: 0.0,
        }
    }

    pub fn cross_speed(
        alpha: f64,
        alpha_prime: f64,
        beta: f64,
        nu: f64,
        lambda: f64,
        lambda_prime: f64,
    ) -> Self {
        WaveInteraction {
            kind: InteractionKind::CrossSpeed,
            alpha,
            alpha_prime,
            beta,
            nu,
            lambda,
            lambda_prime,
            eps: 0.5 * nu,
            k_zone: 2.0 * (lambda - lambda_prime).abs() + 1.0,
        }
    }

    /// Hypotheses under which the estimate is stated.
    pub fn validate(&self) -> Result<()> {
        let (a, ap, b) = (self.alpha, self.alpha_prime, self.beta);
        let mut bad = Vec::new();
        if !(self.nu > 0.0) {
            bad.push("nu > 0".to_string());
        }
        if !(self.eps > 0.0) {
            bad.push("eps > 0".to_string());
        }
        if !(b >= 0.0) {
            bad.push("beta >= 0".to_string());
        }
        if !(a - ap < 3.0) {
            bad.push(format!(
                "alpha - alpha' < 3 (got {}; the time integral then diverges logarithmically at s = t)",
                a - ap
            ));
        }
        match self.kind {
            InteractionKind::SameSpeed => {
                if !(a >= ap && ap >= 0.0) {
                    bad.push("alpha >= alpha' >= 0".into());
                }
                if self.lambda != self.lambda_prime {
                    bad.push("equal speeds".into());
                }
            }
            InteractionKind::CrossSpeed => {
                if !(a >= 1.0 && ap >= 0.0 && a - ap >= 0.0) {
                    bad.push("alpha >= 1, alpha' >= 0, alpha - alpha' >= 0".into());
                }
                if self.lambda == self.lambda_prime {
                    bad.push("distinct speeds".into());
                }
                if !(self.k_zone > 2.0 * (self.lambda - self.lambda_prime).abs()) {
                    bad.push("K > 2 |lambda - lambda'|".into());
                }
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::param(format!(
                "hypotheses violated: {}",
                bad.join("; ")
            )))
        }
    }

    /// Labels of the logarithmic branches that are switched on.
    pub fn branches(&self) -> Vec<String> {
        let (a, b) = (self.alpha, self.beta);
        let mut v = Vec::new();
        let on = |c: bool| if c { "active" } else { "inactive" };
        match self.kind {
            InteractionKind::SameSpeed => {
                v.push(format!("log term at beta = 3/2: {}", on(b == 1.5)));
                v.push(format!(
                    "log term at alpha = 3 or beta = 2: {}",
                    on(a == 3.0 || b == 2.0)
                ));
            }
            InteractionKind::CrossSpeed => {
                v.push(format!("log factor at alpha = 3: {}", on(a == 3.0)));
                v.push(format!("log term at beta = 3/2: {}", on(b == 1.5)));
                v.push(format!("log term at beta = 2: {}", on(b == 2.0)));
            }
        }
        v
    }

    /// Exponents `(gamma, sigma, sigma')` of the right-hand side.
    pub fn exponents(&self) -> (f64, f64, f64) {
        let (a, b) = (self.alpha, self.beta);
        match self.kind {
            InteractionKind::SameSpeed => (
                a + b.min(1.5) - 1.5,
                a.min(3.0) + b.min(2.0) - 3.0,
                f64::NAN,
            ),
            InteractionKind::CrossSpeed => (
                a + 0.5 * b.min(1.5) - 0.75,
                a + b.min(2.0) - 3.0,
                a.min(3.0) + b - 3.0,
            ),
        }
    }

    /// Whether `x` lies in the zone strictly between the two rays.
    pub fn in_zone(&self, x: f64, t: f64) -> bool {
        if self.kind != InteractionKind::CrossSpeed {
            return false;
        }
        let tp = t + 1.0;
        let k = self.k_zone * tp.sqrt();
        let lo = self.lambda.min(self.lambda_prime) * tp + k;
        let hi = self.lambda.max(self.lambda_prime) * tp - k;
        lo <= x && x <= hi
    }

    /// Right-hand side of the estimate with unit constants.
    pub fn rhs(&self, x: f64, t: f64) -> f64 {
        let (a, b) = (self.alpha, self.beta);
        let (g, s, s2) = self.exponents();
        let d = self.nu + self.eps;
        let tp = t + 1.0;
        let log = tp.ln();
        match self.kind {
            InteractionKind::SameSpeed => {
                let th = theta(x, t, self.lambda, d, g);
                let ps = tp.powf(-0.5 * s) * psi(x, t, self.lambda, 1.5);
                let mut v = th + ps;
                if b == 1.5 {
                    v += th * log;
                }
                if a == 3.0 || b == 2.0 {
                    v += ps * log;
                }
                v
            }
            InteractionKind::CrossSpeed => {
                let z = x - self.lambda * tp;
                let a3 = a.min(3.0) / 3.0;
                let mut v = theta(x, t, self.lambda, d, g);
                v +=
                    tp.powf(-0.5 * s) * (z * z + tp.powf(5.0 / 3.0 - b.min(2.0) / 3.0)).powf(-0.75);
                let cross = tp.powf(-0.5 * s2)
                    * psi(x, t, self.lambda_prime, 1.5).powf(a3)
                    * (z * z + tp * tp).powf(-0.75 * (1.0 - a3));
                v += if a == 3.0 { cross * (1.0 + log) } else { cross };
                if self.in_zone(x, t) {
                    v += z.abs().powf(-0.5 * b.min(2.5) - 0.25)
                        * (x - self.lambda_prime * tp).abs().powf(-0.5 * (a - 1.0));
                }
                if b == 1.5 {
                    v += theta(x, t, self.lambda, d, a) * log;
                }
                if b == 2.0 {
                    v += tp.powf(-0.5 * (a - 1.0)) * psi(x, t, self.lambda, 1.5) * log;
                }
                v
            }
        }
    }

    /// Left-hand side with the time integral cut at `t - s >= cutoff`.
    /// `cutoff = 0` gives the full integral (finite when `alpha - alpha' < 3`).
    pub fn lhs_truncated(&self, x: f64, t: f64, cutoff: f64) -> f64 {
        if t <= cutoff {
            return 0.0;
        }
        let (a, ap) = (self.alpha, self.alpha_prime);
        let sq_nu = self.nu.sqrt();
        const Z: f64 = 7.0;
        let inner_opts = QuadOptions::new(1e-300, 1e-10);
        // t - s = u^2 removes the endpoint singularity of the time kernel.
        let integrand = |u: f64| -> f64 {
            let tau = u * u;
            let s = t - tau;
            let w = sq_nu * u;
            let centre = x - self.lambda * tau;
            let peak = self.lambda_prime * (s + 1.0);
            let z0 = (peak - centre) / w;
            let brk: &[f64] = if z0.abs() < Z { &[z0] } else { &[] };
            let inner = integrate_with_breaks(
                |z: f64| (-z * z).exp() * psi(centre + w * z, s, self.lambda_prime, 1.5),
                -Z,
                Z,
                brk,
                inner_opts,
            )
            .value;
            2.0 * sq_nu
                * u.powf(2.0 - (a - ap))
                * (tau + 1.0).powf(-0.5 * ap)
                * (s + 1.0).powf(-0.5 * self.beta)
                * inner
        };
        let (u0, u1) = (cutoff.sqrt(), t.sqrt());
        let mut breaks = Vec::new();
        if self.lambda != self.lambda_prime {
            // Gaussian centre crosses the algebraic peak.
            let tau = (x - self.lambda_prime * (t + 1.0)) / (self.lambda - self.lambda_prime);
            if tau > cutoff && tau < t {
                breaks.push(tau.sqrt());
            }
        }
        let mut opts = QuadOptions::new(1e-300, 1e-8);
        opts.max_intervals = 400;
        integrate_with_breaks(integrand, u0, u1, &breaks, opts).value
    }

    pub fn lhs(&self, x: f64, t: f64) -> Result<f64> {
        self.validate()?;
        Ok(self.lhs_truncated(x, t, 0.0))
    }
}

/// Sup over the grid (and its refinement) of the convolution divided by the
/// assembled right-hand side. Hypothesis violations are refused.
pub fn lemma_wave_interaction_check(
    spec: &WaveInteraction,
    grid: &LemmaGrid,
) -> Result<VerificationReport> {
    spec.validate()?;
    grid.validate()?;
    let name = match spec.kind {
        InteractionKind::SameSpeed => "wave-interaction-same-speed",
        InteractionKind::CrossSpeed => "wave-interaction-cross-speed",
    };
    let mut report =
        VerificationReport::new(name, serde_json::json!({ "spec": spec, "grid": grid }));
    report.grid_levels = vec![
        format!("x {} t {}", grid.x.describe(), grid.t.describe()),
        format!(
            "x {} t {}",
            grid.x.refined().describe(),
            grid.t.refined().describe()
        ),
    ];
    let (g, s, s2) = spec.exponents();
    report.metric("gamma", g);
    report.metric("sigma", s);
    if s2.is_finite() {
        report.metric("sigma_prime", s2);
    }
    report.log.extend(spec.branches());
    let eval = |pt: [f64; 3]| {
        let [x, _, t] = pt;
        Some(Sample {
            lhs: spec.lhs_truncated(x, t, 0.0),
            rhs: spec.rhs(x, t),
            accurate: true,
        })
    };
    two_level(
        &mut report,
        LemmaGrid::points(&grid.x, &grid.t),
        LemmaGrid::points(&grid.x.refined(), &grid.t.refined()),
        false,
        eval,
    );
    Ok(report.finish())
}
