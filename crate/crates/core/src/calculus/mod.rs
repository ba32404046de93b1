//! Closed-form derivatives of cell masses, the energy and the Lloyd maps,
//! the Hessian at fixed points, and the descent-form rewrite of a Lloyd
//! step, with a central-difference harness to check all of them.
//!
//! Coordinates are ordered generator-major: `(x₁, y₁, x₂, y₂, …, w₁, …, w_N)`.

mod derivatives;
mod fd;
mod hessian;

use thiserror::Error;

use crate::energy::EnergyError;
use crate::geometry::GeometryError;
use crate::lloyd::LloydError;

pub use derivatives::{
    energy_gradient, grad_energy, grad_masses, lloyd_jacobian, lloyd_jacobian_from, mass_jacobian,
    EdgeData, EnergyGradient, Linearization, LloydJacobian, MassJacobian,
};
pub use fd::{
    fd_check, fd_check_hessian, stable_coordinates, BlockError, FdReport, FdSteps, HessianCheck,
};
pub use hessian::{
    descent_form, eigen_summary, hessian_at_fixed_point, hessian_product, DescentForm,
    EigenSummary, FixedPointHessian,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CalculusError {
    #[error(transparent)]
    Lloyd(#[from] LloydError),
    #[error("cell {index} is empty; derivatives need every cell to carry mass")]
    EmptyCell { index: usize },
    #[error("cells {i} and {j} touch in a single point")]
    PointContactAdjacency { i: usize, j: usize },
    #[error(
        "not a fixed point: centroid residual {position_residual:e}, weight residual {weight_residual:e}"
    )]
    NotAFixedPoint {
        position_residual: f64,
        weight_residual: f64,
    },
    #[error("the reduced weight Laplacian is singular (disconnected diagram)")]
    SingularA,
    #[error("expected {expected} generators, found {found}")]
    SizeMismatch { expected: usize, found: usize },
}

impl From<EnergyError> for CalculusError {
    fn from(e: EnergyError) -> Self {
        CalculusError::Lloyd(LloydError::Energy(e))
    }
}

impl From<GeometryError> for CalculusError {
    fn from(e: GeometryError) -> Self {
        CalculusError::Lloyd(LloydError::from(e))
    }
}
