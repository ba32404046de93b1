//! Power diagrams of weighted points inside a convex polygon.
//!
//! Cells are built by clipping the domain with one half-plane per other
//! generator. Every clip records which generator produced the new edge, so
//! cell adjacency falls out of the construction with no edge matching.

mod diagram;
mod halfplane;
mod point;
mod polygon;

use thiserror::Error;

pub use diagram::{
    build_power_diagram, locate, voronoi, AdjacencyEdge, AdjacencyGraph, CellEdge, Domain,
    GeneratorSet, PowerCell, PowerDiagram,
};
pub use halfplane::{separating_halfplane, HalfPlane};
pub use point::Point2;
pub use polygon::{
    validate_domain, ConvexPolygon, DomainIssue, DomainReport, CLIP_TOLERANCE, MIN_POLYGON_AREA,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("two generators share position ({}, {})", position.x, position.y)]
    CoincidentGenerators { position: Point2 },
    #[error("generators {first} and {second} are identical (same position and weight)")]
    IdenticalGenerators { first: usize, second: usize },
    #[error("invalid domain: {0}")]
    InvalidDomain(DomainReport),
    #[error("generator {index} at ({}, {}) lies outside the domain", position.x, position.y)]
    GeneratorOutsideDomain { index: usize, position: Point2 },
    #[error("generator {index} has a non-finite position or weight")]
    NonFiniteGenerator { index: usize },
    #[error("{positions} positions but {weights} weights")]
    LengthMismatch { positions: usize, weights: usize },
    #[error("a generator set needs at least one generator")]
    NoGenerators,
}
