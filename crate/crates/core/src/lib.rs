//! Combinatorial-metric models of degenerate hyperbolic 3-manifold ends.
//!
//! Build a [`ModelEnd`] from blocks (or with [`builders::build`]), discretize
//! it into a [`MetricGraph`], trace rays through it and classify them as
//! almost-minimizing or not, thick or thin.

pub mod builders;
pub mod error;
pub mod graph;
pub mod hierarchy;
pub mod model;
pub mod ray;
pub mod report;

pub use error::{Error, Result};
pub use graph::{discretize, Locus, MetricGraph, Node, NodeIdx};
pub use hierarchy::{HierarchyAnnotation, Side, TightGeodesic};
pub use model::{
    meridian_coefficient, validate, Block, BlockVariant, ComponentId, Constants, ModelEnd,
    SplitSurfaceSpec, Tube, TubeId, TubeKind, ValidationReport,
};
