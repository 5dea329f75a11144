//! Deterministic colour-blob detector standing in for a trained network.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{DetectionBox, Detector, DetectorError, DetectorHandle};
use crate::error::{Error, Result};
use crate::imaging::{connected_components, BinaryMask, Connectivity, ImageBuffer};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlobClass {
    pub id: u32,
    #[serde(default)]
    pub name: String,
    pub color: [u8; 3],
    /// Maximum per-channel deviation from `color`.
    #[serde(default = "default_tolerance")]
    pub tolerance: u8,
}

fn default_tolerance() -> u8 {
    40
}

/// Classes of coloured blobs present in synthetic frames.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlobManifest {
    pub classes: Vec<BlobClass>,
    /// Smallest blob, in native-input pixels, that is reported.
    #[serde(default = "default_min_area")]
    pub min_area: usize,
    #[serde(default = "default_native")]
    pub native_size: (usize, usize),
}

fn default_min_area() -> usize {
    9
}

fn default_native() -> (usize, usize) {
    (640, 640)
}

impl BlobManifest {
    pub fn new(classes: Vec<BlobClass>) -> Self {
        Self {
            classes,
            min_area: default_min_area(),
            native_size: default_native(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: BlobManifest = serde_json::from_str(text).map_err(|e| Error::Malformed {
            what: "detector manifest".into(),
            reason: e.to_string(),
        })?;
        m.validate()?;
        Ok(m)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let malformed = |reason: String| Error::Malformed {
            what: "detector manifest".into(),
            reason,
        };
        if self.classes.is_empty() {
            return Err(malformed("no classes".into()));
        }
        let mut ids: Vec<u32> = self.classes.iter().map(|c| c.id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(malformed("duplicate class id".into()));
        }
        if self.min_area == 0 || self.native_size.0 == 0 || self.native_size.1 == 0 {
            return Err(malformed("min_area and native_size must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug)]
pub struct ReferenceDetector {
    manifest: BlobManifest,
}

impl ReferenceDetector {
    pub fn new(manifest: BlobManifest) -> Result<Self> {
        manifest.validate()?;
        Ok(Self { manifest })
    }

    fn class_of(&self, px: &[u8]) -> Option<usize> {
        self.manifest.classes.iter().position(|c| {
            c.color
                .iter()
                .zip(px)
                .all(|(&a, &b)| (a as i16 - b as i16).unsigned_abs() <= c.tolerance as u16)
        })
    }
}

pub fn reference_detector(manifest: BlobManifest) -> Result<DetectorHandle> {
    Ok(Arc::new(ReferenceDetector::new(manifest)?))
}

impl Detector for ReferenceDetector {
    fn name(&self) -> &str {
        "reference"
    }

    fn native_size(&self) -> (usize, usize) {
        self.manifest.native_size
    }

    /// Colour threshold per class, 8-connected components, one box per
    /// component of at least `min_area` pixels. Confidence grows with area.
    fn detect(&self, input: &ImageBuffer) -> Result<Vec<DetectionBox>, DetectorError> {
        if input.channels() != 3 {
            return Err(DetectorError(format!(
                "expected RGB input, got {} channel(s)",
                input.channels()
            )));
        }
        let (w, h) = input.dims();
        let assigned: Vec<Option<usize>> = input
            .data()
            .chunks_exact(3)
            .map(|px| self.class_of(px))
            .collect();
        let mut out = Vec::new();
        for (ci, class) in self.manifest.classes.iter().enumerate() {
            if !assigned.contains(&Some(ci)) {
                continue;
            }
            let bits = assigned.iter().map(|&a| a == Some(ci)).collect();
            let mask = BinaryMask::from_bits(w, h, bits).expect("mask dims");
            let labels = connected_components(&mask, Connectivity::Eight);
            for s in labels.stats() {
                if s.area < self.manifest.min_area {
                    continue;
                }
                let conf = s.area as f64 / (s.area + self.manifest.min_area) as f64;
                out.push(DetectionBox::new(
                    s.min_x as f64,
                    s.min_y as f64,
                    s.bbox_width() as f64,
                    s.bbox_height() as f64,
                    class.id,
                    conf,
                ));
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::draw::fill_rect_rgb;

    fn red_manifest() -> BlobManifest {
        BlobManifest::new(vec![BlobClass {
            id: 0,
            name: "red".into(),
            color: [220, 30, 30],
            tolerance: 40,
        }])
    }

    #[test]
    fn one_red_blob_one_box() {
        let det = ReferenceDetector::new(red_manifest()).unwrap();
        let mut img = ImageBuffer::rgb(64, 48, [90, 90, 90]).unwrap();
        fill_rect_rgb(&mut img, 10, 12, 7, 5, [220, 30, 30]);
        let boxes = det.detect(&img).unwrap();
        assert_eq!(boxes.len(), 1);
        let b = boxes[0];
        assert_eq!((b.x, b.y, b.w, b.h, b.class_id), (10.0, 12.0, 7.0, 5.0, 0));
        assert!(b.confidence > 0.0 && b.confidence <= 1.0);
    }

    #[test]
    fn empty_frame_no_detections() {
        let det = ReferenceDetector::new(red_manifest()).unwrap();
        let img = ImageBuffer::rgb(32, 32, [90, 90, 90]).unwrap();
        assert!(det.detect(&img).unwrap().is_empty());
    }

    #[test]
    fn malformed_manifests_are_rejected() {
        assert!(BlobManifest::from_json("{}").is_err());
        assert!(BlobManifest::from_json(r#"{"classes": []}"#).is_err());
        assert!(BlobManifest::from_json(
            r#"{"classes": [{"id": 1, "color": [1,2,3]}, {"id": 1, "color": [4,5,6]}]}"#
        )
        .is_err());
        let ok = BlobManifest::from_json(r#"{"classes": [{"id": 3, "color": [1,2,3]}]}"#).unwrap();
        assert_eq!((ok.min_area, ok.native_size), (9, (640, 640)));
    }
}
