//! Histogram-based contrast enhancement with selective spatial and gray-level
//! downsampling.
//!
//! Two enhancement families are provided, each in a naive and an accelerated
//! form:
//!
//! * [`he::he`] / [`he::fhe`]: global histogram equalization.
//! * [`smirank::smirank`] / [`smirank::fsmirank`]: gray-level ranking over a
//!   blockwise spatial mutual-information graph.
//!
//! The accelerated variants build their statistics on a decimated image with
//! a coarsened histogram, then rebuild a full-range lookup table by linear
//! completion and upsampling ([`mapping::calibrate`]) before applying it to the
//! original image.

pub mod bench;
mod error;
pub mod he;
pub mod imageio;
pub mod mapping;
pub mod sampling;
pub mod smirank;
pub mod synth;
pub mod verify;

pub use error::{Error, Result};
pub use imageio::{ColorImage, GrayImage, Image};
pub use mapping::{CalibratedCurve, PartialCurve};
pub use sampling::{BlockGrid, BlockHistogramMatrix, Histogram};

/// Default damping factor for the ranking pipelines.
pub const DEFAULT_ALPHA: f64 = 0.9;
/// Default spatial sampling step.
pub const DEFAULT_STEP: usize = 8;
/// Default number of histogram bins for the accelerated pipelines.
pub const DEFAULT_BINS: usize = 64;
