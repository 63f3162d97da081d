use std::io;

/// Errors produced by image I/O and the enhancement pipelines.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("malformed header: {0}")]
    MalformedHeader(String),

    #[error("unsupported format: magic {0:?} (expected P5 or P6)")]
    UnsupportedFormat(String),

    #[error("unsupported maxval {0} (only 255 is supported)")]
    UnsupportedMaxval(u32),

    #[error("truncated payload: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: usize, found: usize },

    #[error("empty image")]
    EmptyImage,

    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: expected {expected:?}, got {got:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },

    #[error("sampling step {step} is invalid for a {width}x{height} image")]
    InvalidStep {
        step: usize,
        width: usize,
        height: usize,
    },

    #[error("n_g must be a power of two in [2, {max}], got {got}")]
    InvalidBinCount { got: usize, max: usize },

    #[error("invalid block grid {blocks_y}x{blocks_x} for a {width}x{height} image")]
    InvalidGrid {
        blocks_y: usize,
        blocks_x: usize,
        width: usize,
        height: usize,
    },

    #[error("empty curve")]
    EmptyCurve,

    #[error("curve abscissae must be strictly increasing and within [0, {max}]")]
    InvalidCurve { max: u32 },

    #[error("scheme-1 upsampling requires a bin-indexed curve covering every bin")]
    Scheme1Unsupported,

    #[error("lookup table has {got} entries, image needs {expected}")]
    LutMismatch { expected: usize, got: usize },

    #[error("empty histogram")]
    EmptyHistogram,

    #[error("block histogram matrix has no occupied column")]
    ZeroMatrix,

    #[error("damping factor must satisfy 0 <= alpha < 1 for the closed-form solve, got {0}")]
    InvalidDamping(f64),

    #[error("linear system is singular")]
    Singular,

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
