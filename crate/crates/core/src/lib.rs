//! Numerics for the nonlinear stability of the ODE blowup solution of the focusing
//! radial wave equation psi_tt - psi_rr - (2/r) psi_r = psi^p in similarity coordinates.

pub mod cheb;
pub mod coords;
pub mod crosscheck;
pub mod error;
pub mod field;
pub mod formal;
pub mod grid;
pub mod params;
pub mod physical;
pub mod properties;
pub mod scalar;
pub mod spectral;
pub mod linear;
pub mod nonlinear;
pub mod sampling;
pub mod trajectory;

pub use error::{ErrorKind, LabError, Result};
pub use field::StateField;
pub use grid::{build_grid, Grid};
pub use params::{binomial, compute_c0, k_min, Parameters, Params};
pub use scalar::Real;
pub use trajectory::Trajectory;

pub type Field = StateField<f64>;
pub type Grid64 = Grid<f64>;
