use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the matting engine.
#[derive(Debug, Error)]
pub enum MatteError {
    #[error("failed to read image {path}: {source}")]
    ImageRead {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("failed to write image {path}: {source}")]
    ImageWrite {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("no frames matching `{pattern}` in {dir}")]
    NoFrames { dir: PathBuf, pattern: String },

    #[error("missing trimap {path} for frame {index}")]
    MissingTrimap { index: usize, path: PathBuf },

    #[error("dimension mismatch: expected {expected_w}x{expected_h}, got {got_w}x{got_h}")]
    DimensionMismatch {
        expected_w: usize,
        expected_h: usize,
        got_w: usize,
        got_h: usize,
    },

    #[error("buffer of {got} pixels does not match {width}x{height}")]
    BufferLength { width: usize, height: usize, got: usize },

    #[error("alpha value {0} outside [0, 1]")]
    AlphaOutOfRange(f64),

    #[error("invalid trimap: {0}")]
    InvalidTrimap(String),

    #[error("invalid filename template `{0}`: expected exactly one %0Nd or %d field")]
    InvalidTemplate(String),

    #[error("empty mask")]
    EmptyMask,

    #[error("patch of width {patch} does not fit a {width}x{height} frame")]
    PatchTooLarge {
        patch: usize,
        width: usize,
        height: usize,
    },

    #[error("patch width {0} must be a power of two")]
    PatchNotPowerOfTwo(usize),

    #[error("too many kernels: {requested} > {available}")]
    TooManyKernels { requested: usize, available: usize },

    #[error("patch at ({x}, {y}) lies outside the frame")]
    PatchOutOfBounds { x: usize, y: usize },

    #[error("missing AKNN field: {0}")]
    MissingField(String),

    #[error("invalid alpha schedule: {0}")]
    InvalidSchedule(String),

    #[error("sequence length mismatch: {0}")]
    SequenceLength(String),

    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<MatteError>,
    },

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T, E = MatteError> = std::result::Result<T, E>;
