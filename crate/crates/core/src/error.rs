use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("non-finite input entry at ({row}, {col})")]
    NonFiniteInput { row: usize, col: usize },

    #[error("{op} produced a non-finite value at ({row}, {col})")]
    NonFiniteResult {
        op: &'static str,
        row: usize,
        col: usize,
    },

    /// Cholesky met a pivot that is not strictly positive and finite.
    #[error("numerical breakdown in {stage} at pivot {pivot_index}")]
    Breakdown {
        stage: &'static str,
        pivot_index: usize,
    },

    #[error("rank deficient: column {column} has no nonzero pivot")]
    RankDeficient { column: usize },

    #[error("singular triangular factor: diagonal entry {index} is zero or non-finite")]
    SingularTriangular { index: usize },

    #[error("assumption violated: {0}")]
    AssumptionViolated(String),

    #[error("matrix generation failed after {attempts} attempts")]
    GenerationFailed { attempts: usize },

    #[error("unsupported output format: {0}")]
    UnsupportedFormat(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
