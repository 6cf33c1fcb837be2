use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("msrep block is already fused")]
    AlreadyFused,

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Archive(#[from] ArchiveError),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

/// Failures while reading, writing or resolving a weight archive.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ArchiveError {
    #[error("bad magic bytes (expected NMVG)")]
    BadMagic,
    #[error("unsupported archive version {0}")]
    UnsupportedVersion(u32),
    #[error("malformed manifest line {line}: {reason}")]
    Manifest { line: usize, reason: String },
    #[error("blob out of bounds for '{0}'")]
    OutOfBounds(String),
    #[error("overlapping offsets between '{0}' and '{1}'")]
    Overlap(String, String),
    #[error("missing parameter '{0}'")]
    Missing(String),
    #[error("duplicate parameter '{0}'")]
    Duplicate(String),
    #[error("unused parameter '{0}'")]
    Unused(String),
    #[error("parameter '{name}' has shape {found:?}, expected {expected:?}")]
    ShapeMismatch {
        name: String,
        expected: Vec<usize>,
        found: Vec<usize>,
    },
}

impl ArchiveError {
    /// Stable numeric code per failure class.
    pub fn code(&self) -> u32 {
        match self {
            ArchiveError::BadMagic => 10,
            ArchiveError::UnsupportedVersion(_) => 11,
            ArchiveError::Manifest { .. } => 12,
            ArchiveError::OutOfBounds(_) => 13,
            ArchiveError::Overlap(..) => 14,
            ArchiveError::Missing(_) => 15,
            ArchiveError::Duplicate(_) => 16,
            ArchiveError::Unused(_) => 17,
            ArchiveError::ShapeMismatch { .. } => 18,
        }
    }
}

pub(crate) fn shape_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Shape(msg.into()))
}
