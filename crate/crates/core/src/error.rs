use thiserror::Error;

use crate::grid::NodeIndex;

/// Errors raised while building or solving discrete systems.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("interpolation stencil of degree {degree} around {point:?} leaves the grid")]
    StencilOutOfGrid { point: [f64; 3], degree: usize },

    #[error("node {node:?} referenced by row {row} is not a band node")]
    NodeNotInBand { node: NodeIndex, row: usize },

    #[error("tube violation at {point:?}: 1 + phi*curvature = {factor:e}")]
    TubeViolation { point: [f64; 3], factor: f64 },

    #[error("closest point minimization did not converge at {point:?} (best parameter {best_param}, residual {residual:e})")]
    NoConvergence {
        point: [f64; 3],
        best_param: f64,
        residual: f64,
    },

    #[error("closest point is not unique at {0:?}")]
    AmbiguousClosestPoint([f64; 3]),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error(
        "iterative solver stalled after {iterations} iterations (relative residual {residual:e})"
    )]
    SolverStalled { iterations: usize, residual: f64 },

    #[error("least-squares fit needs at least {needed} points, got {got}")]
    Underdetermined { needed: usize, got: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
