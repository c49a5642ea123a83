use thiserror::Error;

use crate::picard::PicardTrace;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("element id {0} out of range")]
    InvalidElement(usize),
    #[error("vertex id {0} out of range")]
    InvalidVertex(usize),
    #[error("element {0} has non-positive signed area")]
    Degenerate(usize),
    #[error("element {0} repeats a vertex")]
    RepeatedVertex(usize),
    #[error("non-conforming mesh: {0}")]
    NonConforming(String),
    #[error("triangulations do not share the same initial mesh")]
    DifferentRoots,
    #[error("bisection depth limit ({0}) exceeded")]
    DepthExceeded(usize),
    #[error("mesh format error on line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum FemError {
    #[error("no Dirichlet facet present; |Gamma_D| > 0 is required")]
    NoDirichletBoundary,
    #[error("degenerate element {0} during assembly")]
    DegenerateElement(usize),
    #[error("fine mesh is not a refinement of the coarse mesh")]
    NotNested,
    #[error("function does not belong to this space")]
    SpaceMismatch,
    #[error("linear solve failed: relative residual {residual:e} after {iterations} iterations")]
    LinearSolve { residual: f64, iterations: usize },
    #[error("sparse factorization failed: {0}")]
    Factorization(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("Picard iteration did not stop within {} steps", .0.count())]
    NonTermination(Box<PicardTrace>),
    #[error("Newton and fallback Picard iteration failed to reach tolerance {tol:e} (residual {residual:e})")]
    NewtonFailed { tol: f64, residual: f64 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Fem(#[from] FemError),
}

#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error("element id {0} out of range")]
    InvalidElement(usize),
    #[error("bulk parameter theta must lie in (0, 1], got {0}")]
    InvalidTheta(f64),
}

#[derive(Debug, Error)]
pub enum DriverError {
    #[error("insufficient data: need at least {needed} points, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<MeshError> for SolverError {
    fn from(e: MeshError) -> Self {
        SolverError::Fem(FemError::Mesh(e))
    }
}
