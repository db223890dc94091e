use thiserror::Error;

pub type Result<T> = std::result::Result<T, VbsError>;

#[derive(Debug, Error)]
pub enum VbsError {
    #[error("SU(n) rank must satisfy n >= 2, got n = {0}")]
    InvalidRank(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("unknown axis `{0}`")]
    UnknownAxis(String),

    #[error("axis `{0}` paired or listed more than once")]
    DuplicateAxis(String),

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("state needs {requested} amplitudes, budget is {budget} (set VBS_MAX_AMPLITUDES to raise it)")]
    MemoryBudget { requested: u128, budget: u128 },

    #[error("geometric entanglement per block is only available for even L >= 2, got L = {0}; odd blocks need a separate derivation")]
    UnsupportedBlockLength(i64),

    #[error("optimizer stalled on a zero partial overlap after {0} restarts")]
    DegenerateOverlap(usize),

    #[error("malformed state dump: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
