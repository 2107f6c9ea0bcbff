use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("no frames found in {}", .0.display())]
    NoFrames(PathBuf),

    #[error("missing frame index {0}")]
    MissingFrame(usize),

    #[error("duplicate frame index {index}: {} and {}", .first.display(), .second.display())]
    DuplicateFrame {
        index: usize,
        first: PathBuf,
        second: PathBuf,
    },

    #[error("cannot read frame {}: {reason}", .path.display())]
    UnreadableFrame { path: PathBuf, reason: String },

    #[error("frame {} is {got_w}x{got_h}, expected {want_w}x{want_h}", .path.display())]
    MixedDimensions {
        path: PathBuf,
        got_w: u32,
        got_h: u32,
        want_w: u32,
        want_h: u32,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("k-means: {0}")]
    Clustering(String),

    #[error("need at least {needed} frames for {clusters} clusters but only {available} are available; lower -k or the oversample factor")]
    TooFewFrames {
        needed: usize,
        clusters: usize,
        available: usize,
    },

    #[error("model file: bad magic")]
    BadMagic,

    #[error("model file: unsupported version {0}")]
    UnsupportedVersion(u32),

    #[error("model file: tensor `{0}` is truncated")]
    TruncatedTensor(String),

    #[error("model file: {0}")]
    MalformedModel(String),

    #[error("ground truth: {0}")]
    InvalidTruth(String),

    #[error("frame index {index} outside [0, {total})")]
    FrameOutOfRange { index: usize, total: usize },

    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
