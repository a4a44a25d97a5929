use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("vertex index {index} out of range for dimension {dim}")]
    VertexIndex { index: usize, dim: usize },
    #[error("segment parameter t = {0} outside [0, 1]")]
    ParamRange(f64),
    #[error("point {0:?} is not in the simplex")]
    NotInSimplex(Vec<f64>),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("point is not on the segment (residual {residual:e})")]
    OffSegment { residual: f64 },
    #[error("degenerate segment: x coincides with vertex e_{0}")]
    DegenerateSegment(usize),
    #[error("invalid weight spec: {0}")]
    Spec(String),
    #[error("weights at x = {x:?} are not a probability vector: {p:?}")]
    InvalidWeights { x: Vec<f64>, p: Vec<f64> },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
