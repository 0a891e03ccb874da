use thiserror::Error;

/// Errors raised by the toolkit. Limit-terminated solves are not errors;
/// they come back as a [`crate::exact::SolveReport`] flagged non-optimal.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("node count must be at least 2, got {0}")]
    TooFewNodes(usize),

    #[error("invalid cost range [{low}, {high}]: need 1 <= low <= high")]
    InvalidRange { low: i64, high: i64 },

    #[error("scaling factor must be >= 1, got {0}")]
    InvalidScale(i64),

    #[error("cost overflow while scaling entry ({row}, {col})")]
    Overflow { row: usize, col: usize },

    #[error("matrix is not square: expected {expected} entries, found {found}")]
    NotSquare { expected: usize, found: usize },

    #[error("order is not a permutation of 0..{0}")]
    NotAPermutation(usize),

    #[error("index {index} out of range for tour of length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid move: {0}")]
    InvalidMove(String),

    #[error("no feasible assignment: {0}")]
    Infeasible(String),

    #[error("instance size {n} exceeds the {algorithm} cap of {cap}")]
    SizeCap {
        algorithm: &'static str,
        n: usize,
        cap: usize,
    },

    #[error("tsplib: {0}")]
    Tsplib(String),

    #[error("csv: {0}")]
    Csv(String),

    #[error("solution file: {0}")]
    Solution(String),

    #[error("cut loop: {0}")]
    CutLoop(String),

    #[error("fit: {0}")]
    Fit(String),

    #[error("missing benchmark cells: {0}")]
    MissingCells(String),

    #[error("render: {0}")]
    Render(String),

    #[error("gap undefined for upper bound {0}")]
    UndefinedGap(i64),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
