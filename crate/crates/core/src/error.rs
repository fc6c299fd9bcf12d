use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("field has {got} values, expected {expected}")]
    FieldLength { expected: usize, got: usize },

    #[error("non-finite value at vertex {vertex}")]
    NonFinite { vertex: usize },

    #[error("degenerate triangle {triangle} (signed area {area:e})")]
    DegenerateTriangle { triangle: usize, area: f64 },

    #[error("degenerate triangle (signed area {0:e})")]
    Degenerate(f64),

    #[error("triangle {triangle} has invalid vertex indices {vertices:?}")]
    BadConnectivity { triangle: usize, vertices: [usize; 3] },

    #[error("non-conforming mesh: edge ({0}, {1}) is shared by {2} triangles")]
    NonConforming(usize, usize, usize),

    #[error("boundary edge ({0}, {1}) is not a boundary edge of the triangulation")]
    BadBoundaryEdge(usize, usize),

    #[error("duplicate vertices {0} and {1}")]
    DuplicateVertex(usize, usize),

    #[error("vertex {0} belongs to no triangle")]
    IsolatedVertex(usize),

    #[error("tensor is not symmetric positive-definite: ({m11}, {m12}, {m22})")]
    NotSpd { m11: f64, m12: f64, m22: f64 },

    #[error("non-finite tensor entries")]
    NonFiniteTensor,

    #[error("missing required field `{0}`")]
    MissingField(&'static str),

    #[error("negative water depth {depth:e} at vertex {vertex}")]
    NegativeDepth { vertex: usize, depth: f64 },

    #[error("non-positive monitor value {value:e} at vertex {vertex}")]
    NonPositiveMonitor { vertex: usize, value: f64 },

    #[error("singular diagonal block at vertex {0}")]
    SingularBlock(usize),

    #[error("element inversion not recoverable at iteration {iteration}")]
    InversionUnrecoverable { iteration: usize, last_valid: Box<crate::mmpde::Solution> },

    #[error("meshes have different connectivity")]
    ConnectivityMismatch,

    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },

    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}
