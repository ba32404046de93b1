//! Configuration files, experiment runners and SVG output behind the
//! `powerlloyd` binary. Every runner is a plain function so the examples and
//! tests drive the same code paths as the command line.

mod config;
mod experiments;
mod io;
mod svg;

use thiserror::Error;

use crate::calculus::CalculusError;
use crate::energy::EnergyError;
use crate::geometry::GeometryError;
use crate::lloyd::LloydError;
use crate::measures::MeasureError;

pub use config::{
    DensitySpec, InitSpec, Preset, ProblemConfig, RateSpec, SweepSpec, COUNTRY_FIXTURE,
};
pub use experiments::{
    analyze_state, cmd_analyze, cmd_diagram, cmd_lloyd, cmd_rate, cmd_sweep, diagram_report,
    fit_log_log, lloyd_experiment, rate_experiment, sweep_experiment, Analysis, CellReport,
    DiagramReport, FixedPointTest, GradientReport, HessianReport, LaplacianReport, LineFit,
    LloydOutcome, RateReport, RateRow, RateSummary, SweepReport, SweepRow,
};
pub use io::{read_generators, write_csv, write_json};
pub use svg::{diagram_scene, LinePlot, Series, SvgScene};

/// Process exit status for a successful run.
pub const EXIT_OK: i32 = 0;
/// Exit status for unreadable or invalid input.
pub const EXIT_CONFIG: i32 = 2;
/// Exit status for failures during geometry or iteration.
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Error)]
pub enum AppError {
    /// Bad configuration, state file or command-line input.
    #[error("{0}")]
    Config(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    /// A geometry or numerical failure after the input was accepted.
    #[error("{0}")]
    Numerical(String),
}

impl AppError {
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Config(_) | AppError::Io { .. } => EXIT_CONFIG,
            AppError::Numerical(_) => EXIT_NUMERICAL,
        }
    }

    pub(crate) fn io(path: &std::path::Path, e: impl std::fmt::Display) -> Self {
        AppError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }
}

impl From<GeometryError> for AppError {
    fn from(e: GeometryError) -> Self {
        AppError::Numerical(e.to_string())
    }
}

impl From<EnergyError> for AppError {
    fn from(e: EnergyError) -> Self {
        AppError::Numerical(e.to_string())
    }
}

impl From<LloydError> for AppError {
    fn from(e: LloydError) -> Self {
        AppError::Numerical(e.to_string())
    }
}

impl From<CalculusError> for AppError {
    fn from(e: CalculusError) -> Self {
        AppError::Numerical(e.to_string())
    }
}

impl From<MeasureError> for AppError {
    fn from(e: MeasureError) -> Self {
        AppError::Config(e.to_string())
    }
}
