use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

/// Axis-aligned detection in frame pixel coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
    #[serde(rename = "class")]
    pub class_id: u32,
    #[serde(rename = "conf")]
    pub confidence: f64,
}

impl DetectionBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64, class_id: u32, confidence: f64) -> Self {
        Self {
            x,
            y,
            w,
            h,
            class_id,
            confidence,
        }
    }

    pub fn area(&self) -> f64 {
        self.w.max(0.0) * self.h.max(0.0)
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    /// Ground contact point: middle of the bottom edge.
    pub fn bottom_center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h)
    }

    pub fn iou(&self, other: &DetectionBox) -> f64 {
        let ix = (self.x + self.w).min(other.x + other.w) - self.x.max(other.x);
        let iy = (self.y + self.h).min(other.y + other.h) - self.y.max(other.y);
        if ix <= 0.0 || iy <= 0.0 {
            return 0.0;
        }
        let inter = ix * iy;
        inter / (self.area() + other.area() - inter)
    }

    pub fn translated(mut self, dx: f64, dy: f64) -> Self {
        self.x += dx;
        self.y += dy;
        self
    }

    pub fn scaled(mut self, sx: f64, sy: f64) -> Self {
        self.x *= sx;
        self.w *= sx;
        self.y *= sy;
        self.h *= sy;
        self
    }

    /// Intersection with `[0, width] x [0, height]`; `None` if nothing is left.
    pub fn clamped(self, width: f64, height: f64) -> Option<Self> {
        let x0 = self.x.max(0.0);
        let y0 = self.y.max(0.0);
        let x1 = (self.x + self.w).min(width);
        let y1 = (self.y + self.h).min(height);
        (x1 > x0 && y1 > y0).then_some(Self {
            x: x0,
            y: y0,
            w: x1 - x0,
            h: y1 - y0,
            ..self
        })
    }

    pub fn within(&self, width: f64, height: f64) -> bool {
        self.x >= 0.0 && self.y >= 0.0 && self.x + self.w <= width && self.y + self.h <= height
    }
}

/// Descending confidence, then lexicographic `(x, y, w, h, class)`.
pub fn merge_order(a: &DetectionBox, b: &DetectionBox) -> Ordering {
    b.confidence
        .total_cmp(&a.confidence)
        .then(a.x.total_cmp(&b.x))
        .then(a.y.total_cmp(&b.y))
        .then(a.w.total_cmp(&b.w))
        .then(a.h.total_cmp(&b.h))
        .then(a.class_id.cmp(&b.class_id))
}

/// Greedy class-wise non-maximum suppression: a box is dropped when a kept box
/// of the same class overlaps it with IoU `>= iou_threshold`. The result does
/// not depend on input order.
pub fn nms(mut boxes: Vec<DetectionBox>, iou_threshold: f64) -> Vec<DetectionBox> {
    boxes.sort_by(merge_order);
    let mut kept: Vec<DetectionBox> = Vec::with_capacity(boxes.len());
    for b in boxes {
        if kept
            .iter()
            .all(|k| k.class_id != b.class_id || k.iou(&b) < iou_threshold)
        {
            kept.push(b);
        }
    }
    kept
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn iou_basics() {
        let a = DetectionBox::new(0.0, 0.0, 10.0, 10.0, 0, 0.9);
        assert_eq!(a.iou(&a), 1.0);
        let b = DetectionBox::new(5.0, 0.0, 10.0, 10.0, 0, 0.9);
        assert!((a.iou(&b) - 50.0 / 150.0).abs() < 1e-12);
        let c = DetectionBox::new(10.0, 0.0, 5.0, 5.0, 0, 0.9);
        assert_eq!(a.iou(&c), 0.0);
    }

    #[test]
    fn duplicates_collapse_to_one() {
        let a = DetectionBox::new(3.0, 4.0, 10.0, 10.0, 1, 0.8);
        assert_eq!(nms(vec![a, a], 0.5), vec![a]);
    }

    #[test]
    fn different_classes_do_not_suppress() {
        let a = DetectionBox::new(3.0, 4.0, 10.0, 10.0, 1, 0.8);
        let b = DetectionBox { class_id: 2, ..a };
        assert_eq!(nms(vec![a, b], 0.5).len(), 2);
    }

    #[test]
    fn higher_confidence_wins() {
        let a = DetectionBox::new(0.0, 0.0, 10.0, 10.0, 0, 0.4);
        let b = DetectionBox::new(1.0, 0.0, 10.0, 10.0, 0, 0.9);
        assert_eq!(nms(vec![a, b], 0.5), vec![b]);
    }

    #[test]
    fn clamping() {
        let a = DetectionBox::new(-5.0, 90.0, 20.0, 20.0, 0, 1.0);
        let c = a.clamped(100.0, 100.0).unwrap();
        assert_eq!((c.x, c.y, c.w, c.h), (0.0, 90.0, 15.0, 10.0));
        assert!(DetectionBox::new(120.0, 0.0, 5.0, 5.0, 0, 1.0).clamped(100.0, 100.0).is_none());
    }

    fn box_strategy() -> impl Strategy<Value = DetectionBox> {
        (0u32..40, 0u32..40, 1u32..15, 1u32..15, 0u32..2, 0u32..5).prop_map(|(x, y, w, h, c, q)| {
            DetectionBox::new(x as f64, y as f64, w as f64, h as f64, c, q as f64 / 4.0)
        })
    }

    proptest! {
        #[test]
        fn nms_output_has_no_overlapping_same_class_pair(
            boxes in proptest::collection::vec(box_strategy(), 0..30),
            thr in 0.1f64..0.9,
        ) {
            let kept = nms(boxes, thr);
            for i in 0..kept.len() {
                for j in i + 1..kept.len() {
                    prop_assert!(kept[i].class_id != kept[j].class_id || kept[i].iou(&kept[j]) < thr);
                }
            }
        }

        #[test]
        fn nms_is_order_independent(
            boxes in proptest::collection::vec(box_strategy(), 0..30),
            seed in any::<u64>(),
        ) {
            let mut shuffled = boxes.clone();
            let n = shuffled.len();
            if n > 1 {
                for i in 0..n {
                    let j = ((seed >> (i % 32)) as usize + i * 7) % n;
                    shuffled.swap(i, j);
                }
            }
            prop_assert_eq!(nms(boxes, 0.5), nms(shuffled, 0.5));
        }
    }
}
