use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NonSquare { rows: usize, cols: usize },
    #[error("negative dissimilarity {value} at ({i}, {j})")]
    NegativeEntry { i: usize, j: usize, value: f64 },
    #[error("asymmetry {diff} at ({i}, {j}) exceeds tolerance")]
    AsymmetryExceedsTolerance { i: usize, j: usize, diff: f64 },
    #[error("nonzero diagonal entry {value} at {i}")]
    NonzeroDiagonal { i: usize, value: f64 },
    #[error("non-finite entry at ({i}, {j})")]
    NonFinite { i: usize, j: usize },
    #[error("feature row {row} has zero norm")]
    ZeroNormRow { row: usize },
    #[error("feature rows have inconsistent length (row {row})")]
    RaggedRows { row: usize },
    #[error("matrix {index} has no nonzero off-diagonal entry")]
    AllZeroMatrix { index: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("dimension {m} out of range (max {max})")]
    DimensionOutOfRange { m: usize, max: usize },
    #[error("positive weights do not connect all {n} points")]
    DisconnectedWeights { n: usize },
    #[error("all out-of-sample weights are zero")]
    AllWeightsZero,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("covariance of side {side} is singular and no ridge was given")]
    DegenerateCovariance { side: usize },
    #[error("conditions have different sizes: {0}")]
    SizeMismatch(String),
    #[error("invalid imputation policy: {0}")]
    InvalidPolicy(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("alpha {0} outside (0, 1)")]
    AlphaOutOfRange(f64),
    #[error("basis has rank {rank} < {m}")]
    RankDeficient { rank: usize, m: usize },
    #[error("need at least 3 scree values, got {0}")]
    TooFewValues(usize),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("numeric failure: {0}")]
    NumericFailure(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by malformed or invalid input data.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::NonSquare { .. }
                | Error::NegativeEntry { .. }
                | Error::AsymmetryExceedsTolerance { .. }
                | Error::NonzeroDiagonal { .. }
                | Error::NonFinite { .. }
                | Error::ZeroNormRow { .. }
                | Error::RaggedRows { .. }
                | Error::AllZeroMatrix { .. }
                | Error::SizeMismatch(_)
                | Error::ShapeMismatch(_)
                | Error::DimensionMismatch(_)
                | Error::InsufficientData(_)
                | Error::Parse { .. }
                | Error::Io(_)
                | Error::Json(_)
        )
    }
}
