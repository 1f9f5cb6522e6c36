use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: malformed JSON: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error("unknown label {0:?}")]
    UnknownLabel(String),

    #[error("invalid label space: {0}")]
    LabelSpace(String),

    #[error("label space mismatch: {0}")]
    LabelSpaceMismatch(String),

    #[error("video {video:?}: duration must be positive, got {duration}")]
    NonPositiveDuration { video: String, duration: f64 },

    #[error("invalid segment [{start}, {end}]")]
    InvalidSegment { start: f64, end: f64 },

    #[error("segment [{start}, {end}] lies entirely outside [0, {duration}]")]
    SegmentOutsideVideo { start: f64, end: f64, duration: f64 },

    #[error("score {0} outside [0, 1]")]
    ScoreOutOfRange(f64),

    #[error("bad magic bytes in confidence map file")]
    BadMagic,

    #[error("confidence map payload mismatch: expected {expected} values, found {found}")]
    PayloadMismatch { expected: usize, found: String },

    #[error("truncated confidence map header")]
    TruncatedHeader,

    #[error("confidence map entry {0} outside [0, 1]")]
    MapValueOutOfRange(f32),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid probability vector: {0}")]
    InvalidProbabilities(String),

    #[error("class index {index} out of range for {len} classes")]
    ClassIndexOutOfRange { index: usize, len: usize },

    #[error("need {needed} distinct labels, only {available} present")]
    NotEnoughLabels { needed: usize, available: usize },

    #[error("missing ground-truth label for video {0:?}")]
    MissingTruth(String),
}
