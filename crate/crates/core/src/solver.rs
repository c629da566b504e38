//! Method-of-lines solvers for the linearized and the nonlinear viscous
//! compressible system on the half line (or, for comparisons, the whole line).
//!
//! Unknowns are the density `rho` (background 1) and the momentum `m` at the
//! nodes of a uniform grid. Spatial derivatives are central differences of
//! second or fourth order, time stepping is classical RK4.
//!
//! Boundary treatment at `x = 0`:
//! * momentum: a ghost node `m_{-1} = m_1 + 2 dx (a2/a1) m_0` makes the
//!   centred discrete form of `a1 m_x + a2 m = 0` exact; Dirichlet pins `m_0 = 0`;
//! * density: `rho_t(0) = -m_x(0)` with the one-sided second-order derivative.
//!   With the weights of [`Grid1D::mass_weight`] the discrete mass changes only
//!   by the boundary flux `m_0`.
//!
//! The far end is either an absorbing sponge or linear extrapolation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{FieldState, Grid1D, StepDiagnostics, Trajectory};
use crate::params::{BoundaryClass, ModelParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    #[default]
    Central2,
    Central4,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FarBoundary {
    /// Zero second difference at the end node(s).
    Extrapolation,
    /// Relaxation to the rest state over the outer `fraction` of the domain,
    /// with a quadratic ramp.
    Sponge { fraction: f64 },
}

impl Default for FarBoundary {
    fn default() -> Self {
        FarBoundary::Sponge { fraction: 0.1 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Domain {
    #[default]
    HalfLine,
    /// Two-sided grid without a boundary at `x = 0`.
    WholeLine,
}

/// `p(rho) = k rho^gamma`. The default `k = c^2 / gamma` makes `p'(1) = c^2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PressureLaw {
    pub gamma: f64,
    #[serde(default)]
    pub coefficient: Option<f64>,
}

impl Default for PressureLaw {
    fn default() -> Self {
        PressureLaw {
            gamma: 2.0,
            coefficient: None,
        }
    }
}

impl PressureLaw {
    pub fn coefficient(&self, p: &ModelParams) -> f64 {
        self.coefficient.unwrap_or(p.c * p.c / self.gamma)
    }

    /// Rejects laws whose sound speed `sqrt(p'(1))` differs from `c`.
    pub fn validate(&self, p: &ModelParams) -> Result<()> {
        if !(self.gamma >= 1.0 && self.gamma.is_finite()) {
            return Err(Error::config(format!(
                "pressure exponent must be >= 1 (got {})",
                self.gamma
            )));
        }
        let slope = self.coefficient(p) * self.gamma;
        if (slope - p.c * p.c).abs() > 1e-12 * p.c * p.c {
            return Err(Error::config(format!(
                "pressure law gives p'(1) = {slope} but c^2 = {}",
                p.c * p.c
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn pressure(&self, k: f64, rho: f64) -> f64 {
        if self.gamma == 2.0 {
            k * rho * rho
        } else {
            k * rho.powf(self.gamma)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub grid: Grid1D,
    pub t_end: f64,
    pub cfl_hyp: f64,
    pub cfl_par: f64,
    pub scheme: Scheme,
    pub far_boundary: FarBoundary,
    pub pressure: PressureLaw,
    /// Coefficient of the fourth-difference density dissipation
    /// `-kappa c dx^3 rho_xxxx` (conservative flux form); 0 disables it.
    pub dissipation: f64,
    /// Snapshot times in `(0, t_end]`; `t_end` is always included.
    pub output_times: Vec<f64>,
    pub domain: Domain,
    /// Permit runs in the unstable mixed class.
    pub allow_unstable: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            grid: Grid1D {
                length: 400.0,
                nx: 4000,
                origin: 0.0,
            },
            t_end: 10.0,
            cfl_hyp: 0.5,
            cfl_par: 0.25,
            scheme: Scheme::Central2,
            far_boundary: FarBoundary::default(),
            pressure: PressureLaw::default(),
            dissipation: 0.05,
            output_times: Vec::new(),
            domain: Domain::HalfLine,
            allow_unstable: false,
        }
    }
}

impl SolverConfig {
    pub fn new(grid: Grid1D, t_end: f64) -> Self {
        SolverConfig {
            grid,
            t_end,
            ..Default::default()
        }
    }

    pub fn validate(&self, p: &ModelParams) -> Result<()> {
        self.grid
            .validate()
            .map_err(|e| Error::config(e.to_string()))?;
        for (name, v) in [("cfl_hyp", self.cfl_hyp), ("cfl_par", self.cfl_par)] {
            if !(v > 0.0 && v <= 0.9) {
                return Err(Error::config(format!(
                    "{name} must lie in (0, 0.9] (got {v})"
                )));
            }
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::config(format!(
                "t_end must be positive (got {})",
                self.t_end
            )));
        }
        if !(self.dissipation >= 0.0 && self.dissipation <= 1.0) {
            return Err(Error::config(format!(
                "dissipation must lie in [0, 1] (got {})",
                self.dissipation
            )));
        }
        if let FarBoundary::Sponge { fraction } = self.far_boundary {
            if !(fraction > 0.0 && fraction < 0.5) {
                return Err(Error::config(format!(
                    "sponge fraction must lie in (0, 0.5) (got {fraction})"
                )));
            }
        }
        let mut prev = 0.0;
        for &t in &self.output_times {
            if !(t > prev && t <= self.t_end) {
                return Err(Error::config(format!(
                    "output times must increase strictly inside (0, t_end] (offending value {t})"
                )));
            }
            prev = t;
        }
        match self.domain {
            Domain::HalfLine if self.grid.origin != 0.0 => {
                return Err(Error::config("half-line grids must start at x = 0"));
            }
            Domain::WholeLine if !(self.grid.origin < 0.0) => {
                return Err(Error::config("whole-line grids need a negative origin"));
            }
            _ => {}
        }
        self.pressure.validate(p)
    }

    /// Largest stable step for the given signal speed and viscosity.
    pub fn time_step(&self, speed: f64, nu: f64) -> f64 {
        let dx = self.grid.dx();
        (self.cfl_hyp * dx / speed).min(self.cfl_par * dx * dx / nu)
    }

    fn snapshot_times(&self) -> Vec<f64> {
        let mut v = self.output_times.clone();
        if v.last().map_or(true, |&t| t < self.t_end) {
            v.push(self.t_end);
        }
        v
    }
}

/// Spatial profile of the initial perturbation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialProfile {
    /// `amplitude (1 + x^2)^(-r)`, `r > 1/2`.
    Algebraic { amplitude: f64, r: f64 },
    Gaussian {
        amplitude: f64,
        center: f64,
        width: f64,
    },
    /// `amplitude (1 - s^2)^4` for `|s| < 1`, `s = (x - center) / half_width`.
    Bump {
        amplitude: f64,
        center: f64,
        half_width: f64,
    },
}

impl InitialProfile {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            InitialProfile::Algebraic { amplitude, r } => {
                if !(r > 0.5) {
                    return Err(Error::param(format!(
                        "algebraic data need r > 1/2 (got {r})"
                    )));
                }
                amplitude.is_finite()
            }
            InitialProfile::Gaussian {
                amplitude,
                center,
                width,
            } => amplitude.is_finite() && center.is_finite() && width > 0.0,
            InitialProfile::Bump {
                amplitude,
                center,
                half_width,
            } => amplitude.is_finite() && center.is_finite() && half_width > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::param(format!("invalid initial profile {self:?}")))
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        match *self {
            InitialProfile::Algebraic { amplitude, r } => amplitude * (1.0 + x * x).powf(-r),
            InitialProfile::Gaussian {
                amplitude,
                center,
                width,
            } => {
                let s = (x - center) / width;
                amplitude * (-0.5 * s * s).exp()
            }
            InitialProfile::Bump {
                amplitude,
                center,
                half_width,
            } => {
                let s = (x - center) / half_width;
                if s.abs() < 1.0 {
                    amplitude * (1.0 - s * s).powi(4)
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Components {
    Density,
    Momentum,
    #[default]
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialData {
    pub profile: InitialProfile,
    #[serde(default)]
    pub components: Components,
    /// Blend the first three momentum nodes so the boundary condition holds
    /// at `t = 0`.
    #[serde(default = "yes")]
    pub compatible: bool,
}

fn yes() -> bool {
    true
}

impl InitialData {
    pub fn new(profile: InitialProfile, components: Components) -> Self {
        InitialData {
            profile,
            components,
            compatible: true,
        }
    }
}

/// Samples the initial data at the grid nodes.
///
/// On a half-line grid with `compatible` set, `m` is corrected at nodes 0..2
/// by `delta (1, 4/9, 1/9)` so that `a1 m_x(0) + a2 m(0) = 0` holds with the
/// one-sided second-order derivative.
pub fn make_initial_data(init: &InitialData, grid: &Grid1D, p: &ModelParams) -> Result<FieldState> {
    grid.validate()?;
    init.profile.validate()?;
    let mut s = FieldState::rest(grid);
    for j in 0..grid.nodes() {
        let v = init.profile.value(grid.x(j));
        match init.components {
            Components::Density => s.rho[j] += v,
            Components::Momentum => s.m[j] = v,
            Components::Both => {
                s.rho[j] += v;
                s.m[j] = v;
            }
        }
    }
    if init.compatible && grid.origin == 0.0 {
        make_compatible(&mut s.m, grid.dx(), p);
    }
    Ok(s)
}

fn make_compatible(m: &mut [f64], dx: f64, p: &ModelParams) {
    let residual =
        |v: [f64; 3]| p.a1 * (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * dx) + p.a2 * v[0];
    let w = [1.0, 4.0 / 9.0, 1.0 / 9.0];
    let rw = residual(w);
    if rw.abs() < 1e-12 * (p.a1.abs() / dx + p.a2.abs()) {
        return;
    }
    let delta = -residual([m[0], m[1], m[2]]) / rw;
    for j in 0..3 {
        m[j] += delta * w[j];
    }
}

/// Which system the solver integrates.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Dynamics {
    #[default]
    Linear,
    Nonlinear,
}

/// Semi-discrete right-hand side.
struct Operator {
    kind: Dynamics,
    p: ModelParams,
    half_line: bool,
    n: usize,
    dx: f64,
    fourth: bool,
    kappa: f64,
    sponge: Option<Vec<f64>>,
    pressure: PressureLaw,
    k_pressure: f64,
    flux: Vec<f64>,
    vel: Vec<f64>,
    diss: Vec<f64>,
}

#[inline]
fn d1(v: &[f64], j: usize, h: f64, fourth: bool) -> f64 {
    if fourth {
        (8.0 * (v[j + 1] - v[j - 1]) - (v[j + 2] - v[j - 2])) / (12.0 * h)
    } else {
        (v[j + 1] - v[j - 1]) / (2.0 * h)
    }
}

#[inline]
fn d2(v: &[f64], j: usize, h: f64, fourth: bool) -> f64 {
    if fourth {
        (-v[j + 2] + 16.0 * v[j + 1] - 30.0 * v[j] + 16.0 * v[j - 1] - v[j - 2]) / (12.0 * h * h)
    } else {
        (v[j + 1] - 2.0 * v[j] + v[j - 1]) / (h * h)
    }
}

#[inline]
fn one_sided(v0: f64, v1: f64, v2: f64, h: f64) -> f64 {
    (-3.0 * v0 + 4.0 * v1 - v2) / (2.0 * h)
}

impl Operator {
    fn new(kind: Dynamics, p: &ModelParams, cfg: &SolverConfig) -> Self {
        let n = cfg.grid.nx;
        let dx = cfg.grid.dx();
        let half_line = cfg.domain == Domain::HalfLine;
        let sponge = match cfg.far_boundary {
            FarBoundary::Extrapolation => None,
            FarBoundary::Sponge { fraction } => {
                let width = fraction * cfg.grid.length;
                let strength = 30.0 * p.c / width;
                let lo = cfg.grid.origin;
                let hi = lo + cfg.grid.length;
                Some(
                    (0..=n)
                        .map(|j| {
                            let x = cfg.grid.x(j);
                            let mut depth = (x - (hi - width)) / width;
                            if !half_line {
                                depth = depth.max((lo + width - x) / width);
                            }
                            if depth > 0.0 {
                                strength * depth * depth
                            } else {
                                0.0
                            }
                        })
                        .collect(),
                )
            }
        };
        Operator {
            kind,
            p: *p,
            half_line,
            n,
            dx,
            fourth: cfg.scheme == Scheme::Central4,
            kappa: cfg.dissipation,
            sponge,
            pressure: cfg.pressure,
            k_pressure: cfg.pressure.coefficient(p),
            flux: vec![0.0; n + 1],
            vel: vec![0.0; n + 1],
            diss: vec![0.0; n + 1],
        }
    }

    fn max_sponge(&self) -> f64 {
        self.sponge
            .as_ref()
            .map_or(0.0, |s| s.iter().fold(0.0f64, |a, v| a.max(*v)))
    }

    /// Ghost momentum `m_{-1}` from the boundary condition.
    fn ghost_m(&self, m: &[f64]) -> f64 {
        if self.p.a1 == 0.0 {
            -m[1]
        } else {
            m[1] + 2.0 * self.dx * (self.p.a2 / self.p.a1) * m[0]
        }
    }

    fn eval(&mut self, rho: &[f64], m: &[f64], drho: &mut [f64], dm: &mut [f64]) {
        let n = self.n;
        let h = self.dx;
        let c2 = self.p.c * self.p.c;
        let nu = self.p.nu;
        match self.kind {
            Dynamics::Linear => {
                for j in 0..=n {
                    self.flux[j] = c2 * (rho[j] - 1.0);
                    self.vel[j] = m[j];
                }
            }
            Dynamics::Nonlinear => {
                for j in 0..=n {
                    self.flux[j] =
                        m[j] * m[j] / rho[j] + self.pressure.pressure(self.k_pressure, rho[j]);
                    self.vel[j] = m[j] / rho[j];
                }
            }
        }
        for j in 1..n {
            let fourth = self.fourth && j >= 2 && j + 2 <= n;
            drho[j] = -d1(m, j, h, fourth);
            dm[j] = -d1(&self.flux, j, h, fourth) + nu * d2(&self.vel, j, h, fourth);
        }

        if self.half_line {
            drho[0] = -one_sided(m[0], m[1], m[2], h);
            dm[0] = if self.p.a1 == 0.0 {
                0.0
            } else {
                let mg = self.ghost_m(m);
                let ug = match self.kind {
                    Dynamics::Linear => mg,
                    Dynamics::Nonlinear => mg / (3.0 * rho[0] - 3.0 * rho[1] + rho[2]),
                };
                -one_sided(self.flux[0], self.flux[1], self.flux[2], h)
                    + nu * (self.vel[1] - 2.0 * self.vel[0] + ug) / (h * h)
            };
        } else {
            self.end_node(0, 1, m, drho, dm);
        }
        self.end_node(n, n - 1, m, drho, dm);

        if self.kappa > 0.0 {
            // Third differences at half nodes; zero fluxes next to the ends.
            let first = if self.half_line { 2 } else { 1 };
            self.diss.iter_mut().for_each(|v| *v = 0.0);
            for j in first..=n.saturating_sub(2) {
                self.diss[j] = rho[j + 2] - 3.0 * rho[j + 1] + 3.0 * rho[j] - rho[j - 1];
            }
            let coef = self.kappa * self.p.c / h;
            for j in 1..n {
                drho[j] -= coef * (self.diss[j] - self.diss[j - 1]);
            }
        }

        if let Some(sponge) = &self.sponge {
            for j in 0..=n {
                let s = sponge[j];
                if s > 0.0 {
                    drho[j] -= s * (rho[j] - 1.0);
                    dm[j] -= s * m[j];
                }
            }
        }
    }

    fn end_node(&self, j: usize, inner: usize, m: &[f64], drho: &mut [f64], dm: &mut [f64]) {
        if self.sponge.is_some() {
            drho[j] = 0.0;
            dm[j] = 0.0;
        } else {
            // Linear extrapolation ghost: one-sided first derivative, no diffusion.
            let sign = if j > inner { 1.0 } else { -1.0 };
            drho[j] = -sign * (m[j] - m[inner]) / self.dx;
            dm[j] = -sign * (self.flux[j] - self.flux[inner]) / self.dx;
        }
    }

    fn diagnostics(&mut self, s: &FieldState, grid: &Grid1D) -> StepDiagnostics {
        let mut d = StepDiagnostics {
            max_abs_m: s.max_abs_m(),
            min_rho: s.min_rho(),
            excess_mass: s.excess_mass(grid),
            ..Default::default()
        };
        if self.half_line {
            let (a1, a2) = (self.p.a1, self.p.a2);
            let mg = self.ghost_m(&s.m);
            d.boundary_residual = (a1 * (s.m[1] - mg) / (2.0 * self.dx) + a2 * s.m[0]).abs();
            let mut drho = vec![0.0; self.n + 1];
            let mut dm = vec![0.0; self.n + 1];
            self.eval(&s.rho, &s.m, &mut drho, &mut dm);
            d.boundary_residual_rho_t = (-a1 * drho[0] + a2 * s.m[0]).abs();
        }
        d
    }
}

struct Rk4 {
    k: [(Vec<f64>, Vec<f64>); 4],
    tmp: (Vec<f64>, Vec<f64>),
}

impl Rk4 {
    fn new(len: usize) -> Self {
        let z = || (vec![0.0; len], vec![0.0; len]);
        Rk4 {
            k: [z(), z(), z(), z()],
            tmp: z(),
        }
    }

    fn step(&mut self, op: &mut Operator, rho: &mut [f64], m: &mut [f64], dt: f64) {
        let len = rho.len();
        for stage in 0..4 {
            let (src_r, src_m): (&[f64], &[f64]) = if stage == 0 {
                (rho, m)
            } else {
                let a = if stage == 3 { dt } else { 0.5 * dt };
                let (pr, pm) = &self.k[stage - 1];
                for j in 0..len {
                    self.tmp.0[j] = rho[j] + a * pr[j];
                    self.tmp.1[j] = m[j] + a * pm[j];
                }
                (&self.tmp.0, &self.tmp.1)
            };
            let (kr, km) = &mut self.k[stage];
            op.eval(src_r, src_m, kr, km);
        }
        let w = dt / 6.0;
        for j in 0..len {
            rho[j] +=
                w * (self.k[0].0[j] + 2.0 * self.k[1].0[j] + 2.0 * self.k[2].0[j] + self.k[3].0[j]);
            m[j] +=
                w * (self.k[0].1[j] + 2.0 * self.k[1].1[j] + 2.0 * self.k[2].1[j] + self.k[3].1[j]);
        }
    }
}

fn check_state(rho: &[f64], m: &[f64], t: f64, kind: Dynamics) -> Result<()> {
    for (r, v) in rho.iter().zip(m) {
        if !r.is_finite() || !v.is_finite() {
            return Err(Error::Divergence {
                t,
                reason: "non-finite value in the solution".into(),
            });
        }
        if kind == Dynamics::Nonlinear && *r <= 0.0 {
            return Err(Error::Divergence {
                t,
                reason: format!("density lost positivity (rho = {r})"),
            });
        }
    }
    Ok(())
}

/// Integrates `dynamics` from `init`, handing every snapshot (including the
/// initial one) to `observe` as soon as it is computed.
///
/// On divergence the observer has already seen every good snapshot, so
/// callers that stream to disk keep a usable prefix.
pub fn solve_streaming<F>(
    kind: Dynamics,
    init: &FieldState,
    p: &ModelParams,
    cfg: &SolverConfig,
    mut observe: F,
) -> Result<()>
where
    F: FnMut(&FieldState, &StepDiagnostics) -> Result<()>,
{
    p.validate()?;
    cfg.validate(p)?;
    init.check(&cfg.grid)?;
    if cfg.domain == Domain::HalfLine
        && p.boundary_class() == BoundaryClass::MixedUnstable
        && !cfg.allow_unstable
    {
        return Err(Error::usage(
            "the boundary coefficients lie in the unstable mixed class; set allow_unstable to run",
        ));
    }
    check_state(&init.rho, &init.m, init.t, kind)?;

    let mut op = Operator::new(kind, p, cfg);
    let speed = match kind {
        Dynamics::Linear => p.c,
        Dynamics::Nonlinear => {
            let k = op.k_pressure;
            let g = cfg.pressure.gamma;
            init.rho
                .iter()
                .zip(&init.m)
                .map(|(r, m)| (m / r).abs() + (k * g * r.powf(g - 1.0)).sqrt())
                .fold(p.c, f64::max)
                * 1.25
        }
    };
    let mut dt = cfg.time_step(speed, p.nu);
    let sigma = op.max_sponge();
    if sigma > 0.0 {
        dt = dt.min(2.0 / sigma);
    }

    let grid = cfg.grid;
    let mut state = init.clone();
    observe(&state, &op.diagnostics(&state, &grid))?;

    let mut rk = Rk4::new(grid.nodes());
    let mut t = init.t;
    for target in cfg.snapshot_times() {
        let target = init.t + target;
        let steps = ((target - t) / dt).ceil().max(1.0) as usize;
        let h = (target - t) / steps as f64;
        for i in 0..steps {
            rk.step(&mut op, &mut state.rho, &mut state.m, h);
            let now = t + (i + 1) as f64 * h;
            if i % 16 == 15 || i + 1 == steps {
                check_state(&state.rho, &state.m, now, kind)?;
            }
        }
        t = target;
        state.t = t;
        observe(&state, &op.diagnostics(&state, &grid))?;
    }
    Ok(())
}

fn run(
    kind: Dynamics,
    init: &FieldState,
    p: &ModelParams,
    cfg: &SolverConfig,
) -> Result<Trajectory> {
    let mut traj = Trajectory::new(cfg.grid);
    solve_streaming(kind, init, p, cfg, |s, d| traj.push(s.clone(), *d))?;
    Ok(traj)
}

/// Integrates the linearized system from `init`.
pub fn solve_linear(init: &FieldState, p: &ModelParams, cfg: &SolverConfig) -> Result<Trajectory> {
    run(Dynamics::Linear, init, p, cfg)
}

/// Integrates the nonlinear system `rho_t + m_x = 0`,
/// `m_t + (m^2/rho + p(rho))_x = nu (m/rho)_xx` from `init`.
pub fn solve_nonlinear(
    init: &FieldState,
    p: &ModelParams,
    cfg: &SolverConfig,
) -> Result<Trajectory> {
    run(Dynamics::Nonlinear, init, p, cfg)
}

/// Nonlinear remainder of the momentum equation at one node.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonlinearTermValue {
    pub x: f64,
    /// `-[m^2/rho + p(rho) - p(1) - p'(1)(rho - 1) + nu ((rho - 1) m / rho)_x]`
    pub q_tilde: f64,
    /// `q_tilde_x`, so that `m_t + c^2 rho_x - nu m_xx = q`.
    pub q: f64,
}

/// Evaluates the nonlinear remainder with second-order differences
/// (one-sided at the end nodes).
pub fn nonlinear_term(
    state: &FieldState,
    grid: &Grid1D,
    p: &ModelParams,
    pressure: &PressureLaw,
) -> Result<Vec<NonlinearTermValue>> {
    state.check(grid)?;
    pressure.validate(p)?;
    let k = pressure.coefficient(p);
    let h = grid.dx();
    let n = grid.nx;
    let deriv = |v: &[f64], j: usize| -> f64 {
        if j == 0 {
            one_sided(v[0], v[1], v[2], h)
        } else if j == n {
            -one_sided(v[n], v[n - 1], v[n - 2], h)
        } else {
            (v[j + 1] - v[j - 1]) / (2.0 * h)
        }
    };
    let p1 = pressure.pressure(k, 1.0);
    let c2 = p.c * p.c;
    let mut local = Vec::with_capacity(n + 1);
    let mut visc = Vec::with_capacity(n + 1);
    for j in 0..=n {
        let (r, m) = (state.rho[j], state.m[j]);
        if !(r > 0.0) {
            return Err(Error::param(format!(
                "density must be positive (rho = {r} at node {j})"
            )));
        }
        local.push(m * m / r + pressure.pressure(k, r) - p1 - c2 * (r - 1.0));
        visc.push((r - 1.0) * m / r);
    }
    let q_tilde: Vec<f64> = (0..=n)
        .map(|j| -(local[j] + p.nu * deriv(&visc, j)))
        .collect();
    Ok((0..=n)
        .map(|j| NonlinearTermValue {
            x: grid.x(j),
            q_tilde: q_tilde[j],
            q: deriv(&q_tilde, j),
        })
        .collect())
}

/// Trapezoid energy `1/2 int (c^2 (rho - 1)^2 + m^2)`.
pub fn discrete_energy(state: &FieldState, grid: &Grid1D, p: &ModelParams) -> f64 {
    let c2 = p.c * p.c;
    0.5 * (0..grid.nodes())
        .map(|j| {
            let r = state.rho[j] - 1.0;
            grid.trapezoid_weight(j) * (c2 * r * r + state.m[j] * state.m[j])
        })
        .sum::<f64>()
}

/// Column `component` (0: density, 1: momentum) of the Green matrix with
/// source at `y`, approximated by evolving a normalized Gaussian of the given
/// width. The returned trajectory holds `rho - 1` and `m`, i.e. the entries
/// `G_{0,component}` and `G_{1,component}` smoothed at scale `width`.
pub fn green_column(
    y: f64,
    component: usize,
    width: f64,
    p: &ModelParams,
    cfg: &SolverConfig,
) -> Result<Trajectory> {
    if component > 1 {
        return Err(Error::param(format!(
            "component must be 0 or 1 (got {component})"
        )));
    }
    let dx = cfg.grid.dx();
    if !(width >= 4.0 * dx - 1e-12) {
        return Err(Error::config(format!(
            "pulse width {width} must be at least 4 dx = {}",
            4.0 * dx
        )));
    }
    if cfg.domain == Domain::HalfLine && y < 10.0 * width {
        return Err(Error::config(format!(
            "source y = {y} must lie at least 10 pulse widths from the boundary"
        )));
    }
    let norm = 1.0 / ((2.0 * std::f64::consts::PI).sqrt() * width);
    let mut s = FieldState::rest(&cfg.grid);
    for j in 0..cfg.grid.nodes() {
        let z = (cfg.grid.x(j) - y) / width;
        let v = norm * (-0.5 * z * z).exp();
        if component == 0 {
            s.rho[j] += v;
        } else {
            s.m[j] = v;
        }
    }
    let mut traj = solve_linear(&s, p, cfg)?;
    for snap in &mut traj.snapshots {
        snap.rho.iter_mut().for_each(|r| *r -= 1.0);
    }
    Ok(traj)
}

/// Solves `f_t + speed f_x = diffusivity f_xx` on `grid` with zero end values,
/// fourth-order differences and RK4, returning `f(t_end)`.
pub fn advection_diffusion(
    init: &[f64],
    grid: &Grid1D,
    speed: f64,
    diffusivity: f64,
    t_end: f64,
) -> Result<Vec<f64>> {
    grid.validate()?;
    if init.len() != grid.nodes() {
        return Err(Error::param("initial profile does not match the grid"));
    }
    if !(diffusivity > 0.0 && t_end > 0.0) {
        return Err(Error::param("diffusivity and t_end must be positive"));
    }
    let h = grid.dx();
    let n = grid.nx;
    let dt = (0.5 * h / speed.abs().max(1e-300)).min(0.2 * h * h / diffusivity);
    let steps = (t_end / dt).ceil() as usize;
    let dt = t_end / steps as f64;
    let rhs = |f: &[f64], out: &mut [f64]| {
        out[0] = 0.0;
        out[n] = 0.0;
        for j in 1..n {
            let fourth = j >= 2 && j + 2 <= n;
            out[j] = -speed * d1(f, j, h, fourth) + diffusivity * d2(f, j, h, fourth);
        }
    };
    let mut f = init.to_vec();
    f[0] = 0.0;
    f[n] = 0.0;
    let mut k = vec![vec![0.0; n + 1]; 4];
    let mut tmp = vec![0.0; n + 1];
    for _ in 0..steps {
        rhs(&f, &mut k[0]);
        for (stage, a) in [(1, 0.5), (2, 0.5), (3, 1.0)] {
            for j in 0..=n {
                tmp[j] = f[j] + a * dt * k[stage - 1][j];
            }
            let (_, rest) = k.split_at_mut(stage);
            rhs(&tmp, &mut rest[0]);
        }
        for j in 0..=n {
            f[j] += dt / 6.0 * (k[0][j] + 2.0 * k[1][j] + 2.0 * k[2][j] + k[3][j]);
        }
    }
    if f.iter().any(|v| !v.is_finite()) {
        return Err(Error::Divergence {
            t: t_end,
            reason: "advection-diffusion solution is not finite".into(),
        });
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{e_function, EFunctionArgs};

    fn unit(gamma: f64) -> ModelParams {
        ModelParams::mixed(1.0, 1.0, gamma).unwrap()
    }

    fn small_cfg(length: f64, dx: f64, t_end: f64) -> SolverConfig {
        SolverConfig::new(Grid1D::with_spacing(length, dx).unwrap(), t_end)
    }

    #[test]
    fn rest_state_is_stationary() {
        let p = unit(0.5);
        let cfg = small_cfg(40.0, 0.1, 2.0);
        let s = FieldState::rest(&cfg.grid);
        for traj in [
            solve_linear(&s, &p, &cfg).unwrap(),
            solve_nonlinear(&s, &p, &cfg).unwrap(),
        ] {
            let last = traj.last().unwrap();
            assert!(last.perturbation_norm(&cfg.grid, f64::INFINITY) < 1e-15);
            assert_eq!(last.t, 2.0);
        }
    }

    #[test]
    fn algebraic_profile_values() {
        let g = Grid1D::new(10.0, 10).unwrap();
        let init = InitialData::new(
            InitialProfile::Algebraic {
                amplitude: 0.01,
                r: 1.0,
            },
            Components::Density,
        );
        let s = make_initial_data(&init, &g, &ModelParams::dirichlet(1.0, 1.0).unwrap()).unwrap();
        for j in 0..g.nodes() {
            let x = g.x(j);
            assert!((s.rho[j] - 1.0 - 0.01 / (1.0 + x * x)).abs() < 1e-15);
        }
        let bad = InitialProfile::Algebraic {
            amplitude: 0.01,
            r: 0.5,
        };
        assert!(matches!(bad.validate(), Err(Error::Parameter(_))));
    }

    #[test]
    fn compatibility_blend_enforces_boundary_relation() {
        let g = Grid1D::with_spacing(20.0, 0.05).unwrap();
        let init = InitialData::new(
            InitialProfile::Gaussian {
                amplitude: 1.0,
                center: 0.3,
                width: 1.0,
            },
            Components::Momentum,
        );
        for p in [
            unit(0.5),
            ModelParams::dirichlet(1.0, 1.0).unwrap(),
            ModelParams::neumann(1.0, 1.0).unwrap(),
        ] {
            let s = make_initial_data(&init, &g, &p).unwrap();
            let r = p.a1 * one_sided(s.m[0], s.m[1], s.m[2], g.dx()) + p.a2 * s.m[0];
            assert!(r.abs() < 1e-12, "{r}");
            assert_eq!(s.m[3], init.profile.value(g.x(3)));
        }
    }

    #[test]
    fn cfl_and_pressure_checks_are_configuration_errors() {
        let p = unit(0.5);
        let mut cfg = small_cfg(20.0, 0.1, 1.0);
        cfg.cfl_hyp = 1.2;
        let s = FieldState::rest(&cfg.grid);
        assert!(matches!(
            solve_linear(&s, &p, &cfg),
            Err(Error::Configuration(_))
        ));
        let mut cfg = small_cfg(20.0, 0.1, 1.0);
        cfg.pressure.coefficient = Some(1.0);
        assert!(matches!(
            solve_nonlinear(&s, &p, &cfg),
            Err(Error::Configuration(_))
        ));
        cfg.pressure.coefficient = Some(0.5);
        assert!(solve_nonlinear(&s, &p, &cfg).is_ok());
    }

    #[test]
    fn unstable_class_requires_opt_in() {
        let p = ModelParams::new(1.0, 1.0, 1.0, 1.0).unwrap();
        let mut cfg = small_cfg(20.0, 0.1, 0.5);
        let s = FieldState::rest(&cfg.grid);
        assert!(matches!(solve_linear(&s, &p, &cfg), Err(Error::Usage(_))));
        cfg.allow_unstable = true;
        assert!(solve_linear(&s, &p, &cfg).is_ok());
    }

    #[test]
    fn dirichlet_mass_is_conserved() {
        let p = ModelParams::dirichlet(1.0, 1.0).unwrap();
        let mut cfg = small_cfg(100.0, 0.05, 20.0);
        cfg.output_times = vec![5.0, 10.0, 15.0];
        let init = make_initial_data(
            &InitialData::new(
                InitialProfile::Gaussian {
                    amplitude: 0.1,
                    center: 4.0,
                    width: 1.0,
                },
                Components::Both,
            ),
            &cfg.grid,
            &p,
        )
        .unwrap();
        let traj = solve_linear(&init, &p, &cfg).unwrap();
        let m0 = traj.diagnostics[0].excess_mass;
        for d in &traj.diagnostics {
            assert!(
                (d.excess_mass - m0).abs() < 1e-8 * m0.abs().max(1.0),
                "{} vs {m0}",
                d.excess_mass
            );
        }
    }

    #[test]
    fn energy_does_not_grow_for_dirichlet_and_neumann() {
        for p in [
            ModelParams::dirichlet(1.0, 1.0).unwrap(),
            ModelParams::neumann(1.0, 1.0).unwrap(),
        ] {
            let mut cfg = small_cfg(80.0, 0.05, 12.0);
            cfg.output_times = (1..12).map(f64::from).collect();
            let init = make_initial_data(
                &InitialData::new(
                    InitialProfile::Gaussian {
                        amplitude: 0.1,
                        center: 3.0,
                        width: 1.0,
                    },
                    Components::Both,
                ),
                &cfg.grid,
                &p,
            )
            .unwrap();
            let traj = solve_linear(&init, &p, &cfg).unwrap();
            let e: Vec<f64> = traj
                .snapshots
                .iter()
                .map(|s| discrete_energy(s, &cfg.grid, &p))
                .collect();
            for w in e.windows(2) {
                assert!(w[1] <= w[0] * (1.0 + 1e-9), "{:?}", e);
            }
        }
    }

    #[test]
    fn second_order_convergence_under_refinement() {
        let p = unit(0.5);
        let solve = |dx: f64| {
            let mut cfg = small_cfg(40.0, dx, 3.0);
            cfg.dissipation = 0.0;
            let init = make_initial_data(
                &InitialData::new(
                    InitialProfile::Gaussian {
                        amplitude: 0.1,
                        center: 6.0,
                        width: 1.0,
                    },
                    Components::Both,
                ),
                &cfg.grid,
                &p,
            )
            .unwrap();
            let traj = solve_linear(&init, &p, &cfg).unwrap();
            (cfg.grid, traj.last().unwrap().clone())
        };
        let (g1, s1) = solve(0.2);
        let (_, s2) = solve(0.1);
        let (_, s4) = solve(0.05);
        let diff = |a: &FieldState, b: &FieldState, ra: usize, rb: usize| {
            (0..g1.nodes())
                .map(|j| {
                    (a.m[j * ra] - b.m[j * rb])
                        .abs()
                        .max((a.rho[j * ra] - b.rho[j * rb]).abs())
                })
                .fold(0.0f64, f64::max)
        };
        let e1 = diff(&s1, &s2, 1, 2);
        let e2 = diff(&s2, &s4, 2, 4);
        let order = (e1 / e2).log2();
        assert!(order > 1.9, "observed order {order} ({e1:e}, {e2:e})");
    }

    #[test]
    fn ghost_node_residual_is_at_rounding_level() {
        let p = unit(0.5);
        let mut cfg = small_cfg(60.0, 0.05, 6.0);
        cfg.output_times = vec![2.0, 4.0];
        let init = make_initial_data(
            &InitialData::new(
                InitialProfile::Gaussian {
                    amplitude: 0.1,
                    center: 2.0,
                    width: 1.0,
                },
                Components::Both,
            ),
            &cfg.grid,
            &p,
        )
        .unwrap();
        let traj = solve_linear(&init, &p, &cfg).unwrap();
        for d in &traj.diagnostics {
            assert!(
                d.boundary_residual <= 1e-6 * d.max_abs_m.max(1e-300),
                "{d:?}"
            );
            assert!(d.boundary_residual_rho_t <= 1e-2 * d.max_abs_m, "{d:?}");
        }
    }

    #[test]
    fn nonlinear_term_matches_operator_difference() {
        let p = unit(0.5);
        let cfg = small_cfg(40.0, 0.02, 1.0);
        let init = make_initial_data(
            &InitialData::new(
                InitialProfile::Gaussian {
                    amplitude: 0.05,
                    center: 15.0,
                    width: 1.5,
                },
                Components::Both,
            ),
            &cfg.grid,
            &p,
        )
        .unwrap();
        let n = cfg.grid.nodes();
        let mut lin = Operator::new(Dynamics::Linear, &p, &cfg);
        let mut non = Operator::new(Dynamics::Nonlinear, &p, &cfg);
        let (mut r1, mut m1, mut r2, mut m2) =
            (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        lin.eval(&init.rho, &init.m, &mut r1, &mut m1);
        non.eval(&init.rho, &init.m, &mut r2, &mut m2);
        let q = nonlinear_term(&init, &cfg.grid, &p, &cfg.pressure).unwrap();
        let scale = q.iter().fold(0.0f64, |a, v| a.max(v.q.abs()));
        assert!(scale > 1e-4);
        for j in 10..n - 10 {
            assert!((m2[j] - m1[j] - q[j].q).abs() < 2e-3 * scale, "node {j}");
        }
        let rest =
            nonlinear_term(&FieldState::rest(&cfg.grid), &cfg.grid, &p, &cfg.pressure).unwrap();
        assert!(rest.iter().all(|v| v.q == 0.0 && v.q_tilde == 0.0));
    }

    #[test]
    fn advection_diffusion_reproduces_normalized_e_function() {
        let g = Grid1D::symmetric(20.0, 4000).unwrap();
        let (lambda, d0, gamma) = (1.0, 2.0, 1.0);
        let init: Vec<f64> = (0..g.nodes())
            .map(|j| {
                let x = g.x(j);
                if x < 0.0 {
                    (gamma * x).exp()
                } else if x == 0.0 {
                    0.5
                } else {
                    0.0
                }
            })
            .collect();
        let f = advection_diffusion(&init, &g, lambda, d0 / 4.0, 1.0).unwrap();
        let norm = (std::f64::consts::PI * d0).sqrt();
        let mut err = 0.0f64;
        for j in 0..g.nodes() {
            let x = g.x(j);
            if x.abs() > 15.0 {
                continue;
            }
            let e = e_function(&EFunctionArgs::new(x, 1.0, lambda, d0, gamma).unwrap()).unwrap();
            err = err.max((f[j] - e / norm).abs());
        }
        assert!(err < 1e-4, "{err}");
    }

    #[test]
    fn green_column_rejects_narrow_pulses() {
        let p = unit(0.5);
        let cfg = small_cfg(40.0, 0.05, 1.0);
        assert!(matches!(
            green_column(5.0, 0, 0.1, &p, &cfg),
            Err(Error::Configuration(_))
        ));
        assert!(matches!(
            green_column(1.0, 0, 0.2, &p, &cfg),
            Err(Error::Configuration(_))
        ));
        assert!(green_column(5.0, 1, 0.2, &p, &cfg).is_ok());
    }
}
