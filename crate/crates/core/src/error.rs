use thiserror::Error;

#[derive(Debug, Error)]
pub enum McsError {
    #[error("invalid mesh request: {0}")]
    InvalidMesh(String),
    #[error("element {element} is degenerate (det F = {det:e})")]
    DegenerateElement { element: usize, det: f64 },
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    #[error("quadrature degree {degree} exceeds the supported maximum {max} on the {dim}-simplex")]
    QuadratureDegree { dim: usize, degree: usize, max: usize },
    #[error("field shape error: {0}")]
    Shape(String),
    #[error("singular local Vandermonde for {space} on element {element} (pivot ratio {ratio:e})")]
    SingularVandermonde { space: &'static str, element: usize, ratio: f64 },
    #[error("enrichment functions are linearly dependent on element {element}")]
    EnrichmentRank { element: usize },
    #[error("solver failure: {reason} (relative residual {residual:e})")]
    Solver { reason: String, residual: f64 },
    #[error("eigenvalue computation failed: {0}")]
    Eigen(String),
    #[error("study failed at level n = {level}: {source}")]
    Study { level: usize, source: Box<McsError> },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, McsError>;
