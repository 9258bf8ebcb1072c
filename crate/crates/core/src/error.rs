use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension {dim} is not a power of two between 2 and 64")]
    BadDimension { dim: usize },
    #[error("{n} qubits requested, at most {max} supported")]
    DimensionTooLarge { n: usize, max: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("operator is not Hermitian (deviation {0:e})")]
    NotHermitian(f64),
    #[error("state is not normalized (deviation {0:e})")]
    NotNormalized(f64),
    #[error("matrix is not a density matrix: {0}")]
    NotDensityMatrix(String),
    #[error("operator set is not a complete measurement (deviation {0:e})")]
    IncompleteMeasurement(f64),
    #[error("noise level {0} outside [0, 1]")]
    InvalidNoise(f64),
    #[error("parameter index {0} outside 0..3")]
    InvalidParameter(usize),
    #[error("singular model: minimum Fisher eigenvalue {min_eigenvalue:e}")]
    SingularModel { min_eigenvalue: f64 },
    #[error("degenerate state: {0}")]
    DegenerateState(&'static str),
    #[error("optimizer did not converge: restart values spread {spread:e} relative")]
    NonConvergence { spread: f64 },
    #[error("unsupported size: {0}")]
    Unsupported(String),
    #[error("malformed genome: {0}")]
    MalformedGenome(String),
}

pub type Result<T> = std::result::Result<T, Error>;
