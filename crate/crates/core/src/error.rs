use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad class of a failure, used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Bad input: missing files, malformed headers, invalid parameters.
    Input,
    /// Inputs parsed but their contents are inconsistent or degenerate.
    Integrity,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {}", .0.display())]
    MissingFile(PathBuf),

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed header {}: {reason}", path.display())]
    MalformedHeader { path: PathBuf, reason: String },

    #[error("size mismatch for {}: expected {expected} bytes, found {actual}", path.display())]
    SizeMismatch {
        path: PathBuf,
        expected: u64,
        actual: u64,
    },

    #[error("unknown file magic in {}", .0.display())]
    UnknownMagic(PathBuf),

    #[error("truncated payload in {}: expected {expected} bytes, found {actual}", path.display())]
    Truncated {
        path: PathBuf,
        expected: u64,
        actual: u64,
    },

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("dimension mismatch: {0}")]
    DimMismatch(String),

    #[error("degenerate intensity range: image is constant")]
    DegenerateRange,

    #[error("mask is empty")]
    EmptyMask,

    #[error("masked pixels have zero variance")]
    ZeroVariance,

    #[error("nodule {id}: voxel ({x}, {y}, {z}) outside volume bounds {dims:?}")]
    NoduleOutOfBounds {
        id: String,
        x: i64,
        y: i64,
        z: i64,
        dims: [usize; 3],
    },

    #[error("nodule {id}: {field} rating {value} outside 1..=5")]
    InvalidRating {
        id: String,
        field: &'static str,
        value: i64,
    },

    #[error("no positive labels")]
    NoPositives,

    #[error("json error in {}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::MissingFile(path)
        } else {
            Error::Io { path, source }
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::MissingFile(_)
            | Error::Io { .. }
            | Error::MalformedHeader { .. }
            | Error::UnknownMagic(_)
            | Error::InvalidParam(_)
            | Error::Json { .. }
            | Error::Csv(_) => ErrorClass::Input,
            _ => ErrorClass::Integrity,
        }
    }

    /// Short stable identifier for machine-readable error lines.
    pub fn code(&self) -> &'static str {
        match self {
            Error::MissingFile(_) => "E_MISSING",
            Error::Io { .. } => "E_IO",
            Error::MalformedHeader { .. } => "E_HEADER",
            Error::SizeMismatch { .. } => "E_SIZE",
            Error::UnknownMagic(_) => "E_MAGIC",
            Error::Truncated { .. } => "E_TRUNCATED",
            Error::InvalidParam(_) => "E_PARAM",
            Error::InvalidData(_) => "E_DATA",
            Error::DimMismatch(_) => "E_DIMS",
            Error::DegenerateRange => "E_DEGENERATE",
            Error::EmptyMask => "E_EMPTY_MASK",
            Error::ZeroVariance => "E_ZERO_VARIANCE",
            Error::NoduleOutOfBounds { .. } => "E_NODULE_BOUNDS",
            Error::InvalidRating { .. } => "E_RATING",
            Error::NoPositives => "E_NO_POSITIVES",
            Error::Json { .. } => "E_JSON",
            Error::Csv(_) => "E_CSV",
        }
    }
}
