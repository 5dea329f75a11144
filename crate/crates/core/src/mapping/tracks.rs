//! Floor positions of detections, track association and visit rasters.

use serde::{Deserialize, Serialize};

use super::homography::{Homography, Point2};
use crate::detection::DetectionBox;
use crate::error::{Error, Result};
use crate::imaging::ImageBuffer;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MappedObject {
    /// Index of the detection within its frame.
    pub object_id: usize,
    pub floor_xy: Point2,
    pub frame_index: u64,
    pub source: DetectionBox,
}

/// Floor position of the bottom-center of a box.
pub fn map_to_floor(h: &Homography, det: &DetectionBox, object_id: usize, frame_index: u64) -> Result<MappedObject> {
    let floor_xy = h.apply(det.bottom_center())?;
    if !(floor_xy.0.is_finite() && floor_xy.1.is_finite()) {
        return Err(Error::AtInfinity {
            x: det.bottom_center().0,
            y: det.bottom_center().1,
        });
    }
    Ok(MappedObject {
        object_id,
        floor_xy,
        frame_index,
        source: *det,
    })
}

/// Floor distance in whole centimetres.
pub fn distance_cm(a: &MappedObject, b: &MappedObject) -> i64 {
    floor_distance_cm(a.floor_xy, b.floor_xy)
}

pub fn floor_distance_cm(a: Point2, b: Point2) -> i64 {
    (100.0 * (a.0 - b.0).hypot(a.1 - b.1)).round() as i64
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackPoint {
    pub frame_index: u64,
    pub floor_xy: Point2,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Track {
    pub id: usize,
    pub points: Vec<TrackPoint>,
}

impl Track {
    pub fn last(&self) -> &TrackPoint {
        self.points.last().expect("tracks are created with one point")
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrackHistory {
    pub tracks: Vec<Track>,
}

impl TrackHistory {
    /// Gated greedy nearest-neighbour association of one frame's objects.
    /// Returns the track id assigned to each object, in input order.
    pub fn update(&mut self, mapped: &[MappedObject], max_assoc_dist: f64) -> Result<Vec<usize>> {
        let Some(frame) = mapped.first().map(|m| m.frame_index) else {
            return Ok(Vec::new());
        };
        if mapped.iter().any(|m| m.frame_index != frame) {
            return Err(Error::param("mapped", "objects from more than one frame"));
        }
        let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
        for (ti, t) in self.tracks.iter().enumerate() {
            let last = t.last();
            if last.frame_index >= frame {
                continue;
            }
            for (di, m) in mapped.iter().enumerate() {
                let d = (last.floor_xy.0 - m.floor_xy.0).hypot(last.floor_xy.1 - m.floor_xy.1);
                if d <= max_assoc_dist {
                    pairs.push((d, ti, di));
                }
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut track_used = vec![false; self.tracks.len()];
        let mut assigned: Vec<Option<usize>> = vec![None; mapped.len()];
        for (_, ti, di) in pairs {
            if track_used[ti] || assigned[di].is_some() {
                continue;
            }
            track_used[ti] = true;
            assigned[di] = Some(ti);
        }
        let mut ids = Vec::with_capacity(mapped.len());
        for (di, m) in mapped.iter().enumerate() {
            let point = TrackPoint {
                frame_index: frame,
                floor_xy: m.floor_xy,
            };
            match assigned[di] {
                Some(ti) => {
                    self.tracks[ti].points.push(point);
                    ids.push(self.tracks[ti].id);
                }
                None => {
                    let id = self.tracks.len();
                    self.tracks.push(Track { id, points: vec![point] });
                    ids.push(id);
                }
            }
        }
        Ok(ids)
    }
}

pub fn update_tracks(mut history: TrackHistory, mapped: &[MappedObject], max_assoc_dist: f64) -> Result<TrackHistory> {
    history.update(mapped, max_assoc_dist)?;
    Ok(history)
}

/// Floor rectangle in metres.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FloorBounds {
    pub min: Point2,
    pub max: Point2,
}

/// Visit counts on a regular floor grid; row 0 is the smallest y.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FloorMap {
    pub bounds: FloorBounds,
    pub cell: f64,
    pub cols: usize,
    pub rows: usize,
    pub counts: Vec<u32>,
}

impl FloorMap {
    pub fn get(&self, col: usize, row: usize) -> u32 {
        self.counts[row * self.cols + col]
    }

    pub fn cell_of(&self, p: Point2) -> Option<(usize, usize)> {
        let fx = ((p.0 - self.bounds.min.0) / self.cell).floor();
        let fy = ((p.1 - self.bounds.min.1) / self.cell).floor();
        if fx < 0.0 || fy < 0.0 || fx >= self.cols as f64 || fy >= self.rows as f64 {
            return None;
        }
        Some((fx as usize, fy as usize))
    }

    /// Gray image scaled so the busiest cell is white.
    pub fn to_image(&self) -> ImageBuffer {
        let peak = self.counts.iter().copied().max().unwrap_or(0).max(1) as f64;
        let data = self
            .counts
            .iter()
            .map(|&c| (255.0 * c as f64 / peak).round() as u8)
            .collect();
        ImageBuffer::from_raw(self.cols, self.rows, 1, data).expect("map dimensions")
    }
}

pub fn to_floor_map(history: &TrackHistory, bounds: FloorBounds, cell: f64) -> Result<FloorMap> {
    if !(cell > 0.0 && cell.is_finite()) {
        return Err(Error::param("cell", format!("must be positive, got {cell}")));
    }
    let (w, h) = (bounds.max.0 - bounds.min.0, bounds.max.1 - bounds.min.1);
    if !(w > 0.0 && h > 0.0) {
        return Err(Error::Degenerate(format!("floor bounds {bounds:?} are empty")));
    }
    let cols = ((w / cell) - 1e-9).ceil().max(1.0) as usize;
    let rows = ((h / cell) - 1e-9).ceil().max(1.0) as usize;
    let mut map = FloorMap {
        bounds,
        cell,
        cols,
        rows,
        counts: vec![0; cols * rows],
    };
    for p in history.tracks.iter().flat_map(|t| &t.points) {
        if let Some((c, r)) = map.cell_of(p.floor_xy) {
            map.counts[r * cols + c] += 1;
        }
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obj(id: usize, frame: u64, x: f64, y: f64) -> MappedObject {
        MappedObject {
            object_id: id,
            floor_xy: (x, y),
            frame_index: frame,
            source: DetectionBox::new(0.0, 0.0, 1.0, 1.0, 0, 1.0),
        }
    }

    #[test]
    fn identity_mapping_uses_bottom_center() {
        let b = DetectionBox::new(90.0, 150.0, 20.0, 50.0, 1, 0.9);
        let m = map_to_floor(&Homography::identity(), &b, 0, 3).unwrap();
        assert_eq!(m.floor_xy, (100.0, 200.0));
    }

    #[test]
    fn distances() {
        assert_eq!(distance_cm(&obj(0, 0, 0.0, 0.0), &obj(1, 0, 3.0, 4.0)), 500);
        assert_eq!(distance_cm(&obj(0, 0, 1.5, 1.5), &obj(1, 0, 1.5, 1.5)), 0);
    }

    #[test]
    fn single_walker_gets_one_track() {
        let mut h = TrackHistory::default();
        for f in 0..10 {
            h.update(&[obj(0, f, 0.2 * f as f64, 1.0)], 1.0).unwrap();
        }
        assert_eq!(h.tracks.len(), 1);
        assert!(h.tracks[0].points.windows(2).all(|w| w[0].frame_index < w[1].frame_index));
    }

    #[test]
    fn crossing_walkers_keep_identity() {
        let mut h = TrackHistory::default();
        // two people on parallel lanes 2 m apart walking in opposite directions
        for f in 0..20u64 {
            let t = f as f64 * 0.3;
            let ids = h.update(&[obj(0, f, t, 0.0), obj(1, f, 6.0 - t, 2.0)], 1.0).unwrap();
            assert_eq!(ids, vec![0, 1]);
        }
        assert_eq!(h.tracks.len(), 2);
        assert!(h.tracks[0].points.iter().all(|p| p.floor_xy.1 == 0.0));
    }

    #[test]
    fn empty_frame_changes_nothing() {
        let mut h = TrackHistory::default();
        h.update(&[obj(0, 0, 1.0, 1.0)], 1.0).unwrap();
        let before = h.clone();
        h.update(&[], 1.0).unwrap();
        assert_eq!(h, before);
    }

    #[test]
    fn floor_map_counts() {
        let bounds = FloorBounds { min: (0.0, 0.0), max: (6.0, 2.0) };
        let empty = to_floor_map(&TrackHistory::default(), bounds, 0.1).unwrap();
        assert!(empty.counts.iter().all(|&c| c == 0));
        assert_eq!((empty.cols, empty.rows), (60, 20));

        let mut h = TrackHistory::default();
        for f in 0..10 {
            h.update(&[obj(0, f, 1.05, 1.05)], 1.0).unwrap();
        }
        let m = to_floor_map(&h, bounds, 0.1).unwrap();
        assert_eq!(m.get(10, 10), 10);
        assert_eq!(m.counts.iter().filter(|&&c| c > 0).count(), 1);

        let mut walk = TrackHistory::default();
        for f in 0..50 {
            walk.update(&[obj(0, f, 0.5 + 0.1 * f as f64 + 0.05, 1.25)], 0.5).unwrap();
        }
        let m = to_floor_map(&walk, bounds, 0.1).unwrap();
        assert_eq!(m.counts.iter().filter(|&&c| c > 0).count(), 50);
    }
}
