use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid box [{0}, {1}, {2}, {3}]: corners must be finite with x1 <= x2 and y1 <= y2")]
    InvalidBox(f64, f64, f64, f64),

    #[error("invalid image dimensions {0}x{1}: both sides must be positive")]
    InvalidDims(f64, f64),

    #[error("value out of domain: {0}")]
    Domain(String),

    #[error("anchor detection is not part of the pass set")]
    AnchorNotFound,

    #[error("no positive locations: loss normalizer is undefined")]
    NoPositives,

    #[error("boxes do not overlap: IoU loss is infinite")]
    ZeroOverlap,

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("could not place {placed} of {requested} objects without overlap after {attempts} attempts")]
    InfeasiblePacking {
        placed: usize,
        requested: usize,
        attempts: usize,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
