use std::path::PathBuf;

use thiserror::Error;

use crate::data::{Label, Layout};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: row {row}: {message}", path.display())]
    MalformedRow { path: PathBuf, row: usize, message: String },

    #[error("duplicate video_id `{0}` in manifest")]
    DuplicateVideo(String),

    #[error("frame {frame}: missing landmark point {index}")]
    MissingPoint { frame: u32, index: usize },

    #[error("frame indices must increase: frame {found} follows frame {previous}")]
    NonMonotoneFrames { previous: u32, found: u32 },

    #[error("invalid landmarks: {0}")]
    InvalidLandmarks(String),

    #[error("{}: {message}", path.display())]
    Image { path: PathBuf, message: String },

    #[error("degenerate geometry: {0}")]
    Degenerate(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("feature layout mismatch: expected {expected:?}, found {found:?}")]
    LayoutMismatch { expected: Layout, found: Layout },

    #[error("signal too short: need at least {needed} samples, found {found}")]
    TooShort { needed: usize, found: usize },

    #[error("training data must contain both classes")]
    SingleClass,

    #[error("need at least {needed} {label} records, found {found}")]
    InsufficientRecords { label: Label, needed: usize, found: usize },

    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("video `{video_id}` ({stage}): {source}")]
    Video {
        video_id: String,
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Attaches the video and pipeline stage an error surfaced in.
    pub fn in_video(self, video_id: &str, stage: &'static str) -> Self {
        Error::Video {
            video_id: video_id.to_string(),
            stage,
            source: Box::new(self),
        }
    }
}
