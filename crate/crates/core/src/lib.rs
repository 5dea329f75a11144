//! Offline vision toolkit for cleanliness monitoring in public spaces.
//!
//! Pipelines:
//!
//! - [`bins`]: full/empty classification of open cylindrical bins from the
//!   rim ellipse and interior saturation statistics.
//! - [`stains`]: per-frame water-stain segmentation with per-pixel temporal
//!   persistence.
//! - [`detection`]: detector-agnostic sliced (tiled) inference for small
//!   litter, with a deterministic colour-blob reference detector.
//! - [`mapping`]: fiducial-based floor-plane calibration, floor mapping of
//!   detections, distances and track history.
//! - [`coverage`]: probe-grid camera coverage analysis and greedy placement.
//!
//! [`synth`] renders controllable scenes with ground truth and [`harness`]
//! orchestrates runs, reports and evaluation.

pub mod bins;
pub mod coverage;
pub mod detection;
mod error;
pub mod harness;
pub mod imaging;
pub mod mapping;
pub mod stains;
pub mod synth;

pub use error::{Error, Result};
