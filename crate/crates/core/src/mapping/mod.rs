//! Ground-plane calibration from floor fiducials, floor mapping of
//! detections, distances and track history.

mod fiducial;
mod homography;
mod tracks;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use fiducial::{
    decode, detect_fiducials, draw_marker, marker_cell_value, rotate_cw, FiducialObservation, FiducialParams,
    DICTIONARY, MARKER_CELLS,
};
pub use homography::{estimate_homography, transfer_rms, Homography, Point2};
pub use tracks::{
    distance_cm, floor_distance_cm, map_to_floor, to_floor_map, update_tracks, FloorBounds, FloorMap,
    MappedObject, Track, TrackHistory, TrackPoint,
};

use crate::error::{Error, Result};

/// Where a marker lies on the floor, metres.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkerPlacement {
    /// Marker center.
    pub x: f64,
    pub y: f64,
    /// Side of the black border; when given, all four corners become
    /// correspondences instead of the center alone.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size: Option<f64>,
    /// Rotation of the marker's x axis from the floor x axis, radians.
    #[serde(default)]
    pub yaw: f64,
}

impl MarkerPlacement {
    /// Floor position of marker-frame coordinates `(u, v)` in metres from
    /// the center (u along the marker's top edge, v towards its bottom edge).
    /// Seen from above with floor x to the right and y up, an unrotated
    /// marker reads upright.
    pub fn to_floor(&self, u: f64, v: f64) -> Point2 {
        let (s, c) = self.yaw.sin_cos();
        (self.x + u * c + v * s, self.y + u * s - v * c)
    }

    /// Inverse of [`MarkerPlacement::to_floor`].
    pub fn to_marker(&self, x: f64, y: f64) -> Point2 {
        let (s, c) = self.yaw.sin_cos();
        let (dx, dy) = (x - self.x, y - self.y);
        (dx * c + dy * s, dx * s - dy * c)
    }

    pub fn corners(&self) -> Option<[Point2; 4]> {
        let h = self.size? / 2.0;
        Some([(-h, -h), (h, -h), (h, h), (-h, h)].map(|(u, v)| self.to_floor(u, v)))
    }
}

pub type MarkerWorld = BTreeMap<usize, MarkerPlacement>;

pub fn load_marker_world(path: impl AsRef<Path>) -> Result<MarkerWorld> {
    crate::coverage::load_json(path.as_ref(), "marker world")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub homography: Homography,
    /// RMS distance in pixels between observed image points and the floor
    /// points mapped back into the image.
    pub reprojection_rms_px: f64,
    pub correspondences: usize,
}

/// Image point of the marker center: the intersection of its diagonals.
fn projected_center(c: &[Point2; 4]) -> Option<Point2> {
    let (p, r) = (c[0], (c[2].0 - c[0].0, c[2].1 - c[0].1));
    let (q, s) = (c[1], (c[3].0 - c[1].0, c[3].1 - c[1].1));
    let den = r.0 * s.1 - r.1 * s.0;
    if den.abs() < 1e-12 {
        return None;
    }
    let t = ((q.0 - p.0) * s.1 - (q.1 - p.1) * s.0) / den;
    Some((p.0 + t * r.0, p.1 + t * r.1))
}

/// Image/floor point pairs from the observations of known markers.
pub fn correspondences(observations: &[FiducialObservation], world: &MarkerWorld) -> (Vec<Point2>, Vec<Point2>) {
    let mut img = Vec::new();
    let mut floor = Vec::new();
    for obs in observations {
        let Some(place) = world.get(&obs.marker_id) else { continue };
        match place.corners() {
            Some(wc) => {
                img.extend_from_slice(&obs.corners);
                floor.extend_from_slice(&wc);
            }
            None => {
                if let Some(c) = projected_center(&obs.corners) {
                    img.push(c);
                    floor.push((place.x, place.y));
                }
            }
        }
    }
    (img, floor)
}

pub fn calibrate_points(image: &[Point2], floor: &[Point2]) -> Result<Calibration> {
    let homography = estimate_homography(image, floor)?;
    let back = homography.inverse()?;
    let reprojection_rms_px = transfer_rms(&back, floor, image)?;
    Ok(Calibration {
        homography,
        reprojection_rms_px,
        correspondences: image.len(),
    })
}

pub fn calibrate(observations: &[FiducialObservation], world: &MarkerWorld) -> Result<Calibration> {
    let (img, floor) = correspondences(observations, world);
    if img.len() < 4 {
        return Err(Error::param(
            "observations",
            format!("{} correspondences from known markers, need 4", img.len()),
        ));
    }
    calibrate_points(&img, &floor)
}

/// Position relative to a marker's center, in floor axes.
pub fn offset_from_marker(world: &MarkerWorld, marker_id: usize, p: Point2) -> Option<Point2> {
    world.get(&marker_id).map(|m| (p.0 - m.x, p.1 - m.y))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projected_center_of_a_square() {
        let c = [(0.0, 0.0), (2.0, 0.0), (2.0, 2.0), (0.0, 2.0)];
        assert_eq!(projected_center(&c), Some((1.0, 1.0)));
    }

    #[test]
    fn marker_world_parses_integer_keys() {
        let w: MarkerWorld = serde_json::from_str(r#"{"3": {"x": 1.0, "y": 2.0}, "5": {"x": 0, "y": 0, "size": 0.4}}"#).unwrap();
        assert_eq!(w[&3].size, None);
        let c = w[&5].corners().unwrap();
        assert_eq!(c[0], (-0.2, 0.2));
        let p = MarkerPlacement { x: 1.0, y: 2.0, size: None, yaw: 0.7 };
        let (u, v) = p.to_marker(1.3, 1.9);
        let back = p.to_floor(u, v);
        assert!((back.0 - 1.3).abs() < 1e-12 && (back.1 - 1.9).abs() < 1e-12);
        assert_eq!(offset_from_marker(&w, 3, (2.0, 2.5)), Some((1.0, 0.5)));
    }

    #[test]
    fn too_few_correspondences() {
        let obs = vec![FiducialObservation {
            marker_id: 1,
            corners: [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)],
        }];
        let mut w = MarkerWorld::new();
        w.insert(1, MarkerPlacement { x: 0.0, y: 0.0, size: None, yaw: 0.0 });
        assert!(calibrate(&obs, &w).is_err());
    }
}
