//! The generalized Lloyd iteration: positions move to cell centroids and
//! weights to `−f′(m_i)`, cells that empty out are removed, and the energy
//! never increases.

mod config;
mod iteration;
mod multistart;
mod rate;

use thiserror::Error;

use crate::energy::EnergyError;
use crate::geometry::GeometryError;

pub use config::{LloydConfig, LloydMode};
pub use iteration::{
    eliminate_light_cells, fixed_point_residual, lloyd_maps, run, step, IterationRecord, LloydRun,
    LloydState, LloydTrace, StopReason,
};
pub use multistart::{
    multistart, random_init, start_seed, MultistartResult, MultistartSchedule, StartSummary,
};
pub use rate::{convergence_rate, fit_rate, RateFit, MIN_R_SQUARED, MIN_WINDOW};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LloydError {
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error("cell {index} is empty")]
    EmptyCell { index: usize },
    #[error("cell {index} has mass {mass}, below the mass floor")]
    BelowMassFloor { index: usize, mass: f64 },
    #[error("every cell vanished")]
    Degenerate,
    #[error("insufficient data for a rate fit: {0}")]
    InsufficientData(String),
    #[error("multistart needs at least one start and one generator")]
    NoStarts,
}

impl From<GeometryError> for LloydError {
    fn from(e: GeometryError) -> Self {
        LloydError::Energy(EnergyError::Geometry(e))
    }
}
