use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("empty generator list: the ambient dimension cannot be inferred")]
    EmptyGenerators,

    #[error("invalid order interval at coordinate {index}: lower {lower} > upper {upper}")]
    EmptyInterval { index: usize, lower: f64, upper: f64 },

    #[error("mesh needs at least 2 elements, got {0}")]
    MeshTooCoarse(usize),

    #[error("invalid mesh nodes: {0}")]
    InvalidMesh(String),

    #[error("coefficient has {found} elements but the mesh has {expected}")]
    CoefficientLength { expected: usize, found: usize },

    #[error("singular step matrix: smallest pivot {pivot:e} at row {row}")]
    SingularStep { pivot: f64, row: usize },

    #[error("matrix is not positive definite (Cholesky failed)")]
    NotPositiveDefinite,

    #[error("operation requires a symmetric scenario")]
    NotSymmetric,

    #[error("index {index} out of range (size {len})")]
    OutOfRange { index: usize, len: usize },

    #[error("invalid time grid: {0}")]
    InvalidTimeGrid(String),

    #[error("trajectories are not comparable: {0}")]
    GridMismatch(String),

    #[error("scenario is not of tensor form: {0}")]
    NotTensorForm(String),

    #[error("norm underflow: fewer than two usable samples for a decay fit")]
    NormUnderflow,

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
}

pub type Result<T> = std::result::Result<T, Error>;
