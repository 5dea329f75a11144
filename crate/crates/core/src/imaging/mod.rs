//! Pixel-level primitives shared by every pipeline.
//!
//! All functions are pure; borders are handled by clamping coordinates into
//! the image. Channel depth is 8 bits throughout.

mod buffer;
mod clahe;
mod color;
mod components;
pub mod draw;
mod edges;
mod ellipse;
mod filter;
mod hough;
pub mod io;
mod morphology;
mod rle;

pub use buffer::{BinaryMask, ImageBuffer, Rect};
pub use clahe::clahe;
pub use color::{hsv_pixel, hsv_to_rgb, lightness, rgb_pixel, rgb_to_hsv, rgb_to_lab_l};
pub use components::{
    connected_components, remove_small_components, ComponentStats, Connectivity, LabelMap,
};
pub use edges::{canny, sobel};
pub use ellipse::{fit_ellipse, Conic, Ellipse};
pub use filter::{gaussian_blur, gaussian_kernel};
pub use hough::{ellipse_support, hough_ellipse, EllipseCandidate, HoughParams};
pub use morphology::{dilate, erode, median_filter};
pub use rle::RleMask;
