use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by this library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("curve order {n} out of range (valid: 1..=16)")]
    InvalidOrder { n: u32 },

    #[error("max side {side} invalid: must be a power of two in 2..=65536")]
    InvalidMaxSide { side: u32 },

    #[error("curve index {index} out of range for order {order} ({cells} cells)")]
    IndexOutOfRange { index: u64, order: u8, cells: u64 },

    #[error("point ({x}, {y}) outside the order-{order} grid")]
    PointOutOfRange { x: u32, y: u32, order: u8 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("image side {side} too small for stripe extraction (needs >= 4)")]
    ImageTooSmall { side: u32 },

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("cannot initialize a network from two identical vectors")]
    DegenerateInit,

    #[error("operation needs at least {required} nodes, network has {actual}")]
    NotEnoughNodes { required: usize, actual: usize },

    #[error("node {id} not present in network")]
    UnknownNode { id: u64 },

    #[error("winning node {id} carries no label votes")]
    UnlabeledNode { id: u64 },

    #[error("degenerate split: {0}")]
    DegenerateSplit(String),

    #[error("unsupported model format version {found} (supported: {supported})")]
    ModelVersion { found: u64, supported: u64 },

    #[error("model integrity: {0}")]
    ModelIntegrity(String),

    #[error("model parse: {0}")]
    ModelParse(#[from] serde_json::Error),

    #[error("extractor mismatch: model uses '{model}', session configured '{session}'")]
    ExtractorMismatch { model: String, session: String },

    #[error("palette mismatch: model palette {model}, library palette {library}")]
    PaletteMismatch { model: String, library: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Png {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
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

pub type Result<T> = std::result::Result<T, Error>;
