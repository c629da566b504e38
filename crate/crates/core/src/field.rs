//! Spatial grid, discrete field states and trajectories.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform node-centred grid on `[origin, origin + length]` with `nx` cells
/// (`nx + 1` nodes). Half-line problems use `origin = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid1D {
    pub length: f64,
    pub nx: usize,
    #[serde(default)]
    pub origin: f64,
}

impl Grid1D {
    pub fn new(length: f64, nx: usize) -> Result<Self> {
        let g = Grid1D {
            length,
            nx,
            origin: 0.0,
        };
        g.validate()?;
        Ok(g)
    }

    /// Symmetric grid on `[-half_length, half_length]`.
    pub fn symmetric(half_length: f64, nx: usize) -> Result<Self> {
        let g = Grid1D {
            length: 2.0 * half_length,
            nx,
            origin: -half_length,
        };
        g.validate()?;
        Ok(g)
    }

    /// Grid with the cell size closest to `dx` that divides `length`.
    pub fn with_spacing(length: f64, dx: f64) -> Result<Self> {
        if !(dx > 0.0) {
            return Err(Error::param("grid spacing must be positive"));
        }
        Self::new(length, (length / dx).round().max(1.0) as usize)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length > 0.0 && self.length.is_finite() && self.origin.is_finite()) || self.nx < 4
        {
            return Err(Error::param(format!(
                "grid needs positive length and at least 4 cells (got L = {}, nx = {})",
                self.length, self.nx
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn dx(&self) -> f64 {
        self.length / self.nx as f64
    }

    #[inline]
    pub fn nodes(&self) -> usize {
        self.nx + 1
    }

    #[inline]
    pub fn x(&self, j: usize) -> f64 {
        self.origin + j as f64 * self.dx()
    }

    pub fn coordinates(&self) -> Vec<f64> {
        (0..self.nodes()).map(|j| self.x(j)).collect()
    }

    /// Index of the node nearest to `x`, clamped to the grid.
    pub fn nearest(&self, x: f64) -> usize {
        (((x - self.origin) / self.dx()).round().max(0.0) as usize).min(self.nx)
    }

    /// Quadrature weights `(1/4, 5/4, 1, ..., 1, 1/2) dx`.
    ///
    /// Second-order accurate, and the discrete mass they define is conserved
    /// exactly by the solvers' one-sided boundary update of the density.
    pub fn mass_weight(&self, j: usize) -> f64 {
        let dx = self.dx();
        match j {
            0 => 0.25 * dx,
            1 => 1.25 * dx,
            _ if j == self.nx => 0.5 * dx,
            _ => dx,
        }
    }

    /// Trapezoid weights (half weight at both end nodes).
    pub fn trapezoid_weight(&self, j: usize) -> f64 {
        if j == 0 || j == self.nx {
            0.5 * self.dx()
        } else {
            self.dx()
        }
    }
}

/// Density and momentum at the grid nodes at one time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldState {
    pub t: f64,
    pub rho: Vec<f64>,
    pub m: Vec<f64>,
}

impl FieldState {
    /// The constant state `(rho, m) = (1, 0)`.
    pub fn rest(grid: &Grid1D) -> Self {
        FieldState {
            t: 0.0,
            rho: vec![1.0; grid.nodes()],
            m: vec![0.0; grid.nodes()],
        }
    }

    pub fn check(&self, grid: &Grid1D) -> Result<()> {
        if self.rho.len() != grid.nodes() || self.m.len() != grid.nodes() {
            return Err(Error::param(format!(
                "field arrays have lengths ({}, {}) but the grid has {} nodes",
                self.rho.len(),
                self.m.len(),
                grid.nodes()
            )));
        }
        Ok(())
    }

    pub fn min_rho(&self) -> f64 {
        self.rho.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Pointwise perturbation magnitude `|(rho - 1, m)|`.
    pub fn perturbation(&self) -> Vec<f64> {
        self.rho
            .iter()
            .zip(&self.m)
            .map(|(r, m)| (r - 1.0).hypot(*m))
            .collect()
    }

    pub fn max_abs_m(&self) -> f64 {
        self.m.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }

    /// Discrete integral of `rho - 1` with [`Grid1D::mass_weight`].
    pub fn excess_mass(&self, grid: &Grid1D) -> f64 {
        self.rho
            .iter()
            .enumerate()
            .map(|(j, r)| grid.mass_weight(j) * (r - 1.0))
            .sum()
    }

    /// Trapezoid L^p norm of the perturbation; `p = inf` gives the sup norm.
    pub fn perturbation_norm(&self, grid: &Grid1D, p: f64) -> f64 {
        let u = self.perturbation();
        if p.is_infinite() {
            return u.iter().fold(0.0f64, |a, v| a.max(*v));
        }
        let s: f64 = u
            .iter()
            .enumerate()
            .map(|(j, v)| grid.trapezoid_weight(j) * v.powf(p))
            .sum();
        s.powf(1.0 / p)
    }
}

/// Per-snapshot diagnostics recorded by the solvers.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics {
    /// `|a1 m_x(0) + a2 m(0)|` with the discrete (ghost-node) derivative.
    pub boundary_residual: f64,
    /// `|-a1 rho_t(0) + a2 m(0)|`, the time-derivative form of the condition.
    pub boundary_residual_rho_t: f64,
    pub max_abs_m: f64,
    pub min_rho: f64,
    pub excess_mass: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub grid: Option<Grid1D>,
    pub snapshots: Vec<FieldState>,
    pub diagnostics: Vec<StepDiagnostics>,
}

impl Trajectory {
    pub fn new(grid: Grid1D) -> Self {
        Trajectory {
            grid: Some(grid),
            snapshots: Vec::new(),
            diagnostics: Vec::new(),
        }
    }

    pub fn push(&mut self, state: FieldState, diag: StepDiagnostics) -> Result<()> {
        if let Some(last) = self.snapshots.last() {
            if !(state.t > last.t) {
                return Err(Error::param(format!(
                    "trajectory times must increase strictly ({} after {})",
                    state.t, last.t
                )));
            }
        }
        self.snapshots.push(state);
        self.diagnostics.push(diag);
        Ok(())
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }

    pub fn last(&self) -> Option<&FieldState> {
        self.snapshots.last()
    }

    pub fn grid(&self) -> Result<Grid1D> {
        self.grid
            .ok_or_else(|| Error::param("trajectory carries no grid"))
    }

    /// Snapshot whose time is closest to `t`.
    pub fn at(&self, t: f64) -> Option<&FieldState> {
        self.snapshots
            .iter()
            .min_by(|a, b| (a.t - t).abs().total_cmp(&(b.t - t).abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_geometry() {
        let g = Grid1D::new(10.0, 100).unwrap();
        assert_eq!(g.nodes(), 101);
        assert!((g.dx() - 0.1).abs() < 1e-15);
        assert_eq!(g.nearest(5.04), 50);
        assert_eq!(g.nearest(-3.0), 0);
        assert_eq!(g.nearest(99.0), 100);
        assert!(Grid1D::new(0.0, 10).is_err());
        assert!(Grid1D::new(1.0, 2).is_err());
    }

    #[test]
    fn trajectory_requires_increasing_times() {
        let g = Grid1D::new(1.0, 10).unwrap();
        let mut traj = Trajectory::new(g);
        traj.push(FieldState::rest(&g), StepDiagnostics::default())
            .unwrap();
        let mut s = FieldState::rest(&g);
        assert!(traj.push(s.clone(), StepDiagnostics::default()).is_err());
        s.t = 0.5;
        traj.push(s, StepDiagnostics::default()).unwrap();
        assert_eq!(traj.times(), vec![0.0, 0.5]);
        assert_eq!(traj.at(0.4).unwrap().t, 0.5);
    }

    #[test]
    fn norms_of_rest_state_vanish() {
        let g = Grid1D::new(1.0, 10).unwrap();
        let s = FieldState::rest(&g);
        assert_eq!(s.perturbation_norm(&g, 2.0), 0.0);
        assert_eq!(s.perturbation_norm(&g, f64::INFINITY), 0.0);
        assert_eq!(s.excess_mass(&g), 0.0);
    }
}
