use std::path::PathBuf;

use crate::pose::CoordinateState;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("frame has {0} keypoints, expected 104")]
    KeypointCount(usize),
    #[error("keypoint {index} in frame {frame} is half-missing")]
    HalfMissing { frame: usize, index: usize },
    #[error("group {group} in frame {frame} is partially missing")]
    PartialGroup { frame: usize, group: &'static str },
    #[error("clip has no frames")]
    EmptyClip,
    #[error("fps must be positive and finite, got {0}")]
    InvalidFps(f64),
    #[error("operation requires coordinate state {expected:?}, clip is {actual:?}")]
    WrongState {
        expected: CoordinateState,
        actual: CoordinateState,
    },
    #[error("no present body keypoint")]
    AllBodyMissing,

    #[error("shoulder keypoint missing")]
    ShouldersMissing,
    #[error("shoulder distance {0} is below tolerance")]
    DegenerateShoulders(f64),
    #[error("no frame yields a signing space")]
    NoValidFrame,
    #[error("signing space side length must be positive, got {0}")]
    InvalidSpace(f64),

    #[error("clip contains no present keypoints")]
    EmptyClipGeometry,
    #[error("no frame in the clip yields a signing space")]
    NoValidSigningSpace,

    #[error("max_gap must be at least 1, got {0}")]
    InvalidMaxGap(usize),
    #[error("gap statistics need at least one clip")]
    EmptyCollection,

    #[error("perspective portion {0} outside (-1, 1)")]
    InvalidPortion(f64),
    #[error("body bounding box has zero area")]
    DegenerateBox,
    #[error("noise stddev must be non-negative, got {0}")]
    InvalidStddev(f64),
    #[error("invalid augmentation parameters: {0}")]
    InvalidParams(String),

    #[error("{what} index {index} out of range (len {len})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },
    #[error("tensor kind {actual:?} not valid here, expected {expected}")]
    WrongKind {
        expected: &'static str,
        actual: crate::attention::TensorKind,
    },
    #[error("histogram has zero spread")]
    DegenerateDistribution,
    #[error("histogram needs at least 2 frames, got {0}")]
    TooShort(usize),
    #[error("no input samples")]
    EmptyInput,
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("format error: {0}")]
    Format(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
