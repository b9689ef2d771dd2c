//! Proper conflict-free (PCF) coloring toolkit.
//!
//! Graphs and conflict hypergraphs, coloring verifiers, constructive and
//! exact solvers, exact associated Stirling numbers and list-size bounds,
//! certified numerical checks, and an exact LP for fractional PCF coloring.

pub mod coloring;
pub mod error;
pub mod ext;
pub mod fractional;
pub mod graph;
pub mod io;
pub mod opt;
pub mod rational;
pub mod solvers;
pub mod stirling;
pub mod surd;

pub use coloring::{Color, Coloring, ListAssignment, SetColoring};
pub use error::{Error, Result};
pub use ext::{Ext, Verdict};
pub use graph::{ConflictInstance, Graph, GraphKind, Hypergraph};
