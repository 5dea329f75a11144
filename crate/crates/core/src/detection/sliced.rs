use rayon::prelude::*;

use super::detector::detect_native;
use super::{nms, DetectionBox, Detector, TileFailure, TilePlan};
use crate::error::{Error, Result};
use crate::imaging::ImageBuffer;

/// Baseline inference: the whole frame scaled to the detector input.
pub fn detect_whole(frame: &ImageBuffer, detector: &dyn Detector) -> Result<Vec<DetectionBox>> {
    let (w, h) = (frame.width() as f64, frame.height() as f64);
    let boxes = detect_native(detector, frame).map_err(|e| Error::Detector {
        failures: vec![TileFailure {
            tile_index: 0,
            tile: crate::imaging::Rect::new(0, 0, frame.width(), frame.height()),
            message: e.0,
        }],
    })?;
    Ok(boxes.into_iter().filter_map(|b| b.clamped(w, h)).collect())
}

/// Run the detector on every tile and return the remapped, frame-clamped
/// boxes without merging. Tiles run in parallel unless the detector declares
/// itself serial; all failing tiles are reported together.
pub fn detect_tiles(frame: &ImageBuffer, detector: &dyn Detector, plan: &TilePlan) -> Result<Vec<DetectionBox>> {
    if (plan.frame_w, plan.frame_h) != frame.dims() {
        return Err(Error::DimensionMismatch {
            expected: (plan.frame_w, plan.frame_h),
            got: frame.dims(),
        });
    }
    let run = |(i, tile): (usize, &crate::imaging::Rect)| -> std::result::Result<Vec<DetectionBox>, TileFailure> {
        let fail = |message: String| TileFailure {
            tile_index: i,
            tile: *tile,
            message,
        };
        let crop = frame.crop(*tile).map_err(|e| fail(e.to_string()))?;
        let boxes = detect_native(detector, &crop).map_err(|e| fail(e.0))?;
        Ok(boxes
            .into_iter()
            .map(|b| b.translated(tile.x as f64, tile.y as f64))
            .collect())
    };
    let results: Vec<_> = if detector.concurrent() {
        plan.tiles.par_iter().enumerate().map(run).collect()
    } else {
        plan.tiles.iter().enumerate().map(run).collect()
    };

    let (fw, fh) = (frame.width() as f64, frame.height() as f64);
    let mut boxes = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(b) => boxes.extend(b.into_iter().filter_map(|b| b.clamped(fw, fh))),
            Err(f) => failures.push(f),
        }
    }
    if !failures.is_empty() {
        return Err(Error::Detector { failures });
    }
    Ok(boxes)
}

/// Sliced inference: per-tile detection followed by class-wise greedy NMS at
/// `merge_iou`.
pub fn detect_sliced(
    frame: &ImageBuffer,
    detector: &dyn Detector,
    plan: &TilePlan,
    merge_iou: f64,
) -> Result<Vec<DetectionBox>> {
    if !(merge_iou > 0.0 && merge_iou < 1.0) {
        return Err(Error::param("merge_iou", format!("must be in (0, 1), got {merge_iou}")));
    }
    Ok(nms(detect_tiles(frame, detector, plan)?, merge_iou))
}
