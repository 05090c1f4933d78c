use thiserror::Error;

/// Errors raised by the mesh adaptation toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("degenerate element: {0}")]
    DegenerateElement(String),

    #[error("invalid polygon: {0}")]
    InvalidPolygon(String),

    #[error("cut line does not cross the polygon interior")]
    CutMissesPolygon,

    #[error("split produced a non-simple piece")]
    NonSimpleResult,

    #[error("invalid topology: {0}")]
    InvalidTopology(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),

    #[error("triangulation failed: {0}")]
    TriangulationFailed(String),

    #[error("linear solve failed: {0}")]
    SolveFailed(String),

    #[error("node {node} has no admissible edge for the edge-average coefficient")]
    NoAdmissibleEdge { node: usize },

    #[error("point ({x}, {y}) lies outside the mesh")]
    PointOutsideMesh { x: f64, y: f64 },

    #[error("H1 mapping sandwich violated: {lower} <= {value} <= {upper} fails")]
    SandwichViolated { lower: f64, value: f64, upper: f64 },

    #[error("invalid expression: {0}")]
    Expression(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
