use thiserror::Error;

/// Errors produced anywhere in the fusion pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("no views supplied")]
    NoViews,

    #[error("view {view} has {found} nodes, expected {expected}")]
    NodeCountMismatch {
        view: usize,
        expected: usize,
        found: usize,
    },

    #[error("view {view} does not share the edge set of view 0")]
    EdgeSetMismatch { view: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("k = {k} must satisfy 1 <= k < n = {n}")]
    InvalidK { k: usize, n: usize },

    #[error("graph has no edges")]
    EmptyEdgeSet,

    #[error("invalid edge ({i}, {j}) in a graph over {n} nodes")]
    InvalidEdge { i: usize, j: usize, n: usize },

    #[error("duplicate edge ({i}, {j})")]
    DuplicateEdge { i: usize, j: usize },

    #[error("edge ({i}, {j}) has invalid weight {weight}")]
    InvalidWeight { i: usize, j: usize, weight: f64 },

    #[error("row {row} sums to zero and cannot be normalized")]
    ZeroRow { row: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("starting point is not on the probability simplex")]
    OffSimplex,

    #[error("starting point violates the box constraints")]
    BoxViolation,

    #[error("largest eigenvalue {0:e} of the shared Hessian is not positive")]
    NonPositiveCurvature(f64),

    #[error("eigen-solver did not converge: {0}")]
    NoConvergence(String),

    #[error("label vectors have lengths {0} and {1}")]
    LengthMismatch(usize, usize),

    #[error("need at least {needed} labelled points, got {found}")]
    TooFewPoints { needed: usize, found: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
