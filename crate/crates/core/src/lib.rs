//! Cell complex inference from edge flows.
//!
//! Given a graph and a set of observed edge flows, `cellflow` greedily adds
//! polygonal 2-cells so that the flows are explained by gradient and curl
//! components, leaving as little harmonic flow as possible.

pub mod cli;
pub mod complex;
pub mod flows;
pub mod heuristics;
pub mod hodge;
pub mod inference;
pub mod lsmr;
pub mod sparse;
pub mod synth;

pub use complex::{build_b1, build_b2, BoundaryMatrices, CellComplex, CellKey, ComplexError, Skeleton, TwoCell};
pub use flows::{FlowError, FlowMatrix};
pub use lsmr::{SolverConfig, SolverError};
pub use sparse::SparseMatrix;
