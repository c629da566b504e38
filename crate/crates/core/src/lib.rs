//! Half-line Green's function of the linearized isentropic compressible
//! Navier-Stokes system with a mixed boundary condition `a1 m_x + a2 m = 0`.
//!
//! The crate provides exact transform-space formulas, closed-form
//! leading-order kernels, independent numerical inverses of the transforms,
//! a method-of-lines solver for the linear and nonlinear problems, and
//! harnesses that compare all of them against pointwise decay envelopes.

pub mod envelope;
pub mod error;
pub mod field;
pub mod kernels;
pub mod matrix;
pub mod params;
pub mod quadrature;
pub mod solver;
pub mod special;
pub mod spectral;
pub mod transforms;
pub mod verify;

pub use envelope::{a0_profile, psi_envelope, theta_envelope, BoundEnvelope};
pub use error::{Error, Result};
pub use field::{FieldState, Grid1D, StepDiagnostics, Trajectory};
pub use kernels::{
    acoustic_projection, e_bound_check, e_function, fundamental_leading, green_leading,
    mirror_leading, EFunctionArgs, Sign,
};
pub use matrix::{CMatrix2, DeltaTerm, KernelValue, Matrix2};
pub use params::{BoundaryClass, ModelParams, SingularRate};
pub use solver::{
    green_column, make_initial_data, solve_linear, solve_nonlinear, solve_streaming, Components,
    Domain, Dynamics, FarBoundary, InitialData, InitialProfile, PressureLaw, Scheme, SolverConfig,
};
pub use spectral::{
    dispersion_sigma, find_boundary_pole, fourier_fundamental, lambda_of_s, laplace_fundamental,
    laplace_green, reflection_coefficient, ComplexPair, LaplaceGreenValue,
};
pub use transforms::{
    invert_fourier_fundamental, invert_laplace_green, mirror_by_quadrature, ContourKind,
    FourierOracle, QuadratureConfig,
};
pub use verify::{Status, VerificationReport};
