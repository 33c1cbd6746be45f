use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty cluster: cannot compute a centroid of zero points")]
    EmptyCluster,

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("dimension {0} is odd; rotary blocks need an even dimension")]
    OddDimension(usize),

    #[error("degenerate centroid: zero-norm vector")]
    DegenerateCentroid,

    #[error("invalid k = {k} for {count} vectors")]
    InvalidK { k: usize, count: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("code {index} out of range for layer {layer} with capacity {capacity}")]
    CodeOutOfRange {
        layer: usize,
        index: usize,
        capacity: usize,
    },

    #[error("no POIs assigned to SID {0}")]
    EmptySidGroup(String),

    #[error("record {record}: {message}")]
    InvalidRecord { record: String, message: String },

    #[error("format error: {0}")]
    Format(String),

    #[error("unsupported format version {found} (expected {expected})")]
    UnsupportedVersion { found: u32, expected: u32 },

    #[error("checksum mismatch: stored {stored:#018x}, computed {computed:#018x}")]
    Checksum { stored: u64, computed: u64 },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn record(record: impl Into<String>, message: impl Into<String>) -> Self {
        Error::InvalidRecord {
            record: record.into(),
            message: message.into(),
        }
    }

    /// Wraps the error with the pipeline stage it came from.
    pub fn at(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// True when the root cause is an operating-system I/O failure.
    pub fn is_io(&self) -> bool {
        match self {
            Error::Io(_) => true,
            Error::Stage { source, .. } => source.is_io(),
            _ => false,
        }
    }
}
