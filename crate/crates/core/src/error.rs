use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("insufficient samples: need at least {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("bad magic in {path}: expected {expected:?}")]
    BadMagic { path: PathBuf, expected: &'static str },

    #[error("unsupported version {found} in {path}")]
    UnsupportedVersion { path: PathBuf, found: u32 },

    #[error("truncated payload in {path}: expected {expected} bytes, found {found}")]
    Truncated { path: PathBuf, expected: usize, found: usize },

    #[error("non-finite pixel at index {index} in {path}")]
    NanPixel { path: PathBuf, index: usize },

    #[error("track {track} range {range_m:.3} m at t = {t:.3} s leaves [0.3, 6.0] m")]
    RangeOutOfBounds { track: usize, t: f64, range_m: f64 },

    #[error("no non-activity zone found")]
    NoNonActivityZone,

    #[error("insufficient margin: keypoint at ({row}, {col}) scale {scale:.2}")]
    InsufficientMargin { row: f64, col: f64, scale: f64 },

    #[error("class with no examples: activity {0}")]
    EmptyClass(usize),

    #[error("missing style exemplar for activity {0}")]
    MissingExemplar(usize),

    #[error("missing (activity {activity}, domain {domain}) pair")]
    MissingPair { activity: usize, domain: String },

    #[error("insufficient synthetic items for activity {activity}: need {needed}, have {have}")]
    InsufficientSynthetic { activity: usize, needed: usize, have: usize },

    #[error("class {0} has fewer than 2 items and cannot be stratified")]
    CannotStratify(usize),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::ShapeMismatch(msg.into())
    }
}
