//! Detector-agnostic sliced inference for small objects.
//!
//! A frame is cut into overlapping tiles, each tile is resized to the
//! detector's native input and detected independently, and the remapped boxes
//! are merged with class-wise greedy non-maximum suppression.

mod benchmark;
mod boxes;
mod detector;
mod reference;
mod sliced;
mod tiles;

pub use benchmark::{
    benchmark, benchmark_frame, render_table, BenchmarkParams, TableColumn, TimingRecord,
    REFERENCE_RESOLUTIONS,
};
pub use boxes::{merge_order, nms, DetectionBox};
pub use detector::{detect_native, Detector, DetectorError, DetectorHandle, TileFailure};
pub use reference::{reference_detector, BlobClass, BlobManifest, ReferenceDetector};
pub use sliced::{detect_sliced, detect_tiles, detect_whole};
pub use tiles::{axis_origins, plan_tiles, plan_tiles_clamped, TilePlan};
