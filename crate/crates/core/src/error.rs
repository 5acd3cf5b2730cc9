use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, KppcaError>;

/// Coarse failure classes, used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Io,
    Data,
    Numeric,
}

#[derive(Debug, Error)]
pub enum KppcaError {
    #[error("matrix contains NaN or infinite entries")]
    NonFinite,
    #[error("symmetric eigensolver did not converge")]
    NoConvergence,
    #[error("matrix is not positive semi-definite (eigenvalue {value:e} below -{floor:e})")]
    NegativeEigenvalue { value: f64, floor: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("{0}")]
    InvalidArgument(String),

    #[error("latent dimension q={q} outside 1..={max}")]
    LatentTooLarge { q: usize, max: usize },
    #[error("noise variance {sigma2:e} exceeds the largest admissible value {max:e}")]
    SigmaTooLarge { sigma2: f64, max: f64 },
    #[error("noise variance estimate undefined for q = N")]
    QEqualsN,
    #[error("operation requires a strictly positive noise variance")]
    SigmaZero,
    #[error("kernel matrix is not centered (largest row sum {max_row_sum:e})")]
    NotCentered { max_row_sum: f64 },
    #[error(
        "latent dimension q={q} exceeds the numerical rank {rank} of the centered kernel matrix"
    )]
    LatentExceedsRank { q: usize, rank: usize },
    #[error("centered kernel matrix has rank below the latent dimension")]
    RankDeficient,
    #[error("spectrum is identically zero")]
    ZeroSpectrum,
    #[error("kernel smoother normalizer is numerically zero ({0:e})")]
    DegenerateNormalizer(f64),

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },
    #[error("row {row} has {found} fields, expected {expected}")]
    RaggedRows {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("bad IDX magic number {found:#010x} (expected {expected:#010x})")]
    BadMagic { expected: u32, found: u32 },
    #[error("image count {images} does not match label count {labels}")]
    CountMismatch { images: usize, labels: usize },
    #[error("file truncated: {0}")]
    Truncated(String),
    #[error("unsupported model file version {found} (this build reads {supported})")]
    VersionMismatch { found: u32, supported: u32 },
    #[error("corrupt model file: {0}")]
    CorruptFile(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl KppcaError {
    pub fn class(&self) -> ErrorClass {
        use KppcaError::*;
        match self {
            Io { .. } => ErrorClass::Io,
            Parse { .. }
            | RaggedRows { .. }
            | BadMagic { .. }
            | CountMismatch { .. }
            | Truncated(_)
            | VersionMismatch { .. }
            | CorruptFile(_)
            | DimensionMismatch { .. } => ErrorClass::Data,
            _ => ErrorClass::Numeric,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        KppcaError::Io {
            path: path.into(),
            source,
        }
    }
}
