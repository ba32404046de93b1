//! Mass costs, the energy functional, the quantization distortion and the
//! helper function `H` used to prove energy decrease.

mod cost;
mod functional;

use thiserror::Error;

use crate::geometry::GeometryError;

pub use cost::{CostFunction, CostSpec};
pub use functional::{
    distortion, energy, energy_of_diagram, helper_h, helper_h_constrained, CellEnergy,
    EnergyBreakdown, Problem,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnergyError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("inadmissible cost: {0}")]
    InvalidCost(String),
    #[error("total mass {total} exceeds the cost's limit {limit}")]
    MassLimitExceeded { total: f64, limit: f64 },
    #[error("invalid mass vector: {0}")]
    InvalidMassVector(String),
    #[error("the density has zero total mass on the domain")]
    ZeroTotalMass,
}
