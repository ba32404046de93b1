//! Densities and the mass, centroid and second moments of cells and edges.
//!
//! Constant densities are integrated in closed form from the vertices.
//! Analytic densities use a degree-10 triangle rule on a fan triangulation
//! and 16-point Gauss–Legendre on segments. Raster densities are integrated
//! exactly by clipping against the pixel grid.

mod density;
mod moments;
mod quadrature;

use thiserror::Error;

pub use density::{load_raster, parse_raster, AnalyticDensity, Density, RasterDensity};
pub use moments::{
    edge_moments, polygon_moments, polygon_moments_about, total_mass, CellMoments, EdgeMoments,
};
pub use quadrature::{GaussLegendre, TriangleRule};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseErrorKind {
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("negative density {0}")]
    NegativeDensity(f64),
    #[error("unparseable value {0:?}")]
    BadValue(String),
    #[error("expected {expected} values in row, found {found}")]
    WrongRowLength { expected: usize, found: usize },
    #[error("expected {expected} rows, found {found}")]
    MissingRows { expected: usize, found: usize },
    #[error("data after the last row")]
    ExtraData,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error("line {line}: {kind}")]
    Parse { line: usize, kind: ParseErrorKind },
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("{0}")]
    InvalidDensity(String),
}
