use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Operand extents disagree.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A tensor or record has a shape the operation cannot accept at all.
    #[error("shape error: {0}")]
    Shape(String),

    #[error("extent {extent} on axis {axis} is not divisible by {divisor}")]
    Divisibility {
        axis: &'static str,
        extent: usize,
        divisor: usize,
    },

    #[error("degenerate batch: {0}")]
    DegenerateBatch(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("index {index} out of range for {len} classes")]
    Index { index: usize, len: usize },

    #[error("graph state: {0}")]
    GraphState(String),

    #[error("non-finite gradient in parameter `{0}`")]
    Numeric(String),

    #[error("invalid model spec: {0}")]
    Spec(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("epoch windows out of bounds for events {events:?}")]
    WindowBounds { events: Vec<usize> },

    #[error("metric error: {0}")]
    Metric(String),

    #[error("degenerate test: {0}")]
    DegenerateTest(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("truncated input: {0}")]
    Truncated(String),

    #[error("checksum mismatch (stored {stored:#010x}, computed {computed:#010x})")]
    Checksum { stored: u32, computed: u32 },

    #[error("learning-curve runner failed at K={k}, repetition {rep}: {source}")]
    Runner {
        k: usize,
        rep: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
