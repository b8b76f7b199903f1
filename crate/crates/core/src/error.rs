use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, CompassError>;

/// Error classes for process exit codes: 1 usage, 2 data, 3 numerical.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Data,
    Numerical,
}

#[derive(Debug, Error)]
pub enum CompassError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("organ mask has no inside voxels")]
    EmptyMask,

    #[error("grid mismatch: expected {expected}, got {actual}")]
    GridMismatch { expected: String, actual: String },

    #[error("value length {actual} does not match grid size {expected}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("negative dose {value} at voxel {index}")]
    NegativeDose { index: usize, value: f64 },

    #[error("non-finite value in {context}")]
    NonFinite { context: String },

    #[error("malformed volume header: {0}")]
    MalformedHeader(String),

    #[error("malformed manifest: {0}")]
    MalformedManifest(String),

    #[error("malformed CSV: {0}")]
    MalformedCsv(String),

    #[error("missing file {path}")]
    MissingFile { path: PathBuf },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("patient {patient}: duplicate fraction index {index}")]
    DuplicateFraction { patient: String, index: usize },

    #[error("patient {patient} organ {organ}: missing fraction {index} in trajectory")]
    MissingFraction {
        patient: String,
        organ: String,
        index: usize,
    },

    #[error("index out of range: {0}")]
    OutOfRange(String),

    #[error("training labels contain a single class")]
    SingleClass,

    #[error("too few complete pairs for correlation (need >= 2, got {0})")]
    TooFewPairs(usize),

    #[error("optimizer did not converge: final gradient norm {grad_norm:.3e}")]
    NonConvergence { grad_norm: f64 },

    #[error("training diverged at epoch {epoch}: loss {loss}")]
    Divergence { epoch: usize, loss: f64 },
}

impl CompassError {
    /// Map variants to CLI exit-code classes.
    pub fn class(&self) -> ErrorClass {
        use CompassError::*;
        match self {
            InvalidConfig(_) => ErrorClass::Usage,
            NonFinite { .. } | NonConvergence { .. } | Divergence { .. } => ErrorClass::Numerical,
            _ => ErrorClass::Data,
        }
    }
}
