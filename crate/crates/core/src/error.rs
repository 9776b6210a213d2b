//! Error taxonomy for the solver.

use crate::grid::CellIndex;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SldgError {
    /// Non-finite or otherwise unusable input data.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Benchmark name not in the catalog.
    #[error("unknown problem '{0}'")]
    UnknownProblem(String),

    /// Edge construction failed (coincident endpoints, or a quadratic edge
    /// whose mid vertex does not lie between its endpoints).
    #[error("degenerate edge: {0}")]
    DegenerateEdge(String),

    /// Upstream cell with non-positive signed area; the time step does not
    /// resolve the deformation of the mesh.
    #[error("inverted upstream cell {cell} at t={time}: signed area {area:e}")]
    InvertedCell {
        cell: CellIndex,
        time: f64,
        area: f64,
    },

    /// 1D upstream interval with feet out of order.
    #[error("inverted upstream interval of cell {cell}: [{left}, {right}]")]
    InvertedInterval { cell: usize, left: f64, right: f64 },

    /// Segment search produced a boundary that does not chain into closed
    /// loops within tolerance.
    #[error("geometry inconsistency in upstream cell {cell}: {detail}")]
    GeometryInconsistency { cell: CellIndex, detail: String },

    /// Characteristic tracing produced a non-finite stage value.
    #[error("characteristic trace failure starting from ({x}, {y})")]
    TraceFailure { x: f64, y: f64 },

    /// Least-squares reconstruction of the test function hit a
    /// rank-deficient vertex configuration (collapsed cell).
    #[error("singular test-function geometry in cell {cell}")]
    SingularGeometry { cell: CellIndex },

    /// A scheme-level contract was violated (e.g. a negative cell average
    /// reaching the bound-preserving filter).
    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
