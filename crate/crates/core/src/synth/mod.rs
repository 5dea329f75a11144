//! Synthetic frames with exact ground truth.

pub mod bin_view;
pub mod ellipse;
pub mod scene;
pub mod presets;
