use std::sync::Arc;

use thiserror::Error;

use super::DetectionBox;
use crate::imaging::{ImageBuffer, Rect};

#[derive(Clone, Debug, Error, PartialEq)]
#[error("{0}")]
pub struct DetectorError(pub String);

/// An object detector consuming images at a fixed native input size.
///
/// Implementations must be deterministic: identical input bytes give
/// identical detections. Returned boxes are in the coordinates of the image
/// passed to [`Detector::detect`].
pub trait Detector: Send + Sync {
    fn name(&self) -> &str;

    /// `(width, height)` the detector expects.
    fn native_size(&self) -> (usize, usize);

    fn detect(&self, input: &ImageBuffer) -> Result<Vec<DetectionBox>, DetectorError>;

    /// Whether [`Detector::detect`] may be called from several threads at once.
    fn concurrent(&self) -> bool {
        true
    }
}

pub type DetectorHandle = Arc<dyn Detector>;

/// Failure of one tile of a sliced run.
#[derive(Clone, Debug, PartialEq)]
pub struct TileFailure {
    pub tile_index: usize,
    pub tile: Rect,
    pub message: String,
}

impl std::fmt::Display for TileFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "tile {} at ({}, {}) {}x{}: {}",
            self.tile_index, self.tile.x, self.tile.y, self.tile.w, self.tile.h, self.message
        )
    }
}

/// Resize `image` to the detector's native input, detect, and map the boxes
/// back by the inverse scale.
pub fn detect_native(detector: &dyn Detector, image: &ImageBuffer) -> Result<Vec<DetectionBox>, DetectorError> {
    let (nw, nh) = detector.native_size();
    let resized = image
        .resize_bilinear(nw, nh)
        .map_err(|e| DetectorError(e.to_string()))?;
    let sx = image.width() as f64 / nw as f64;
    let sy = image.height() as f64 / nh as f64;
    Ok(detector
        .detect(&resized)?
        .into_iter()
        .map(|b| b.scaled(sx, sy))
        .collect())
}
