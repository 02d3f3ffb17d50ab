//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("alphabet mismatch: {0} vs {1}")]
    AlphabetMismatch(usize, usize),

    #[error("index {index} out of range (dimension {dim})")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("word of length {len} exceeds truncation level {max}")]
    WordTooLong { len: usize, max: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("not a contraction: largest singular value {sigma} exceeds 1 + {tol}")]
    NotAContraction { sigma: f64, tol: f64 },

    #[error("block shapes inconsistent with the named spaces: {0}")]
    SpaceMismatch(String),

    #[error("condition (*) fails: smallest singular value of I - B1*C is {sigma_min:.3e}")]
    StarConditionFailed { sigma_min: f64 },

    #[error("ill-conditioned resolvent: {0}")]
    IllConditioned(String),

    #[error("matrix is not unitary: residual {residual:.3e} (tolerance {tol:.3e})")]
    NotUnitary { residual: f64, tol: f64 },

    #[error("dense-range hypothesis fails: block rank {found} < defect rank {expected}")]
    RankDeficient { found: usize, expected: usize },

    #[error("constraint violated: max generator norm {max_norm:.3e} exceeds {tol:.3e}")]
    ConstraintViolated { max_norm: f64, tol: f64 },

    #[error("degenerate generator: {0}")]
    DegenerateGenerator(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}
