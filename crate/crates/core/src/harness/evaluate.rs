//! Scoring a run report against a ground-truth manifest.

use serde::{Deserialize, Serialize};

use super::config::Pipeline;
use super::report::{frames, FrameReport, MappedPerson, MappingSection, ReportLine, StainSection, REPORT_VERSION};
use crate::bins::BinRecord;
use crate::detection::DetectionBox;
use crate::error::{Error, Result};
use crate::synth::scene::GroundTruthManifest;

pub const MATCH_IOU: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionMetrics {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    /// 1.0 when nothing was predicted.
    pub precision: f64,
    /// 1.0 when there was nothing to find.
    pub recall: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub frames: usize,
    pub detection: DetectionMetrics,
    /// Pooled over frames: total intersection over total union.
    pub stain_iou: f64,
    pub bin_accuracy: f64,
    pub bins_total: usize,
    /// RMS floor error in metres over people matched by box, if any.
    pub mapping_rms_m: Option<f64>,
    pub people_matched: usize,
    pub people_total: usize,
}

/// Greedy one-to-one matching of same-class boxes by decreasing IoU.
/// Returns `(prediction, truth)` index pairs.
pub fn match_boxes(pred: &[DetectionBox], truth: &[DetectionBox], min_iou: f64, class_aware: bool) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for (i, p) in pred.iter().enumerate() {
        for (j, t) in truth.iter().enumerate() {
            if class_aware && p.class_id != t.class_id {
                continue;
            }
            let iou = p.iou(t);
            if iou >= min_iou {
                pairs.push((iou, i, j));
            }
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut used_p = vec![false; pred.len()];
    let mut used_t = vec![false; truth.len()];
    let mut out = Vec::new();
    for (_, i, j) in pairs {
        if !used_p[i] && !used_t[j] {
            used_p[i] = true;
            used_t[j] = true;
            out.push((i, j));
        }
    }
    out
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        1.0
    } else {
        num as f64 / den as f64
    }
}

pub fn evaluate(report: &[ReportLine], manifest: &GroundTruthManifest) -> Result<Metrics> {
    let frames: Vec<&FrameReport> = frames(report).collect();
    if frames.len() != manifest.frames.len() {
        return Err(Error::DimensionMismatch {
            expected: (manifest.frames.len(), 1),
            got: (frames.len(), 1),
        });
    }

    let (mut tp, mut n_pred, mut n_truth) = (0, 0, 0);
    let (mut inter, mut union) = (0usize, 0usize);
    let (mut bins_ok, mut bins_total) = (0, 0);
    let (mut sq, mut matched, mut people) = (0.0, 0usize, 0usize);

    for (fr, truth) in frames.iter().zip(&manifest.frames) {
        let pred = fr.litter.as_deref().unwrap_or(&[]);
        tp += match_boxes(pred, &truth.boxes, MATCH_IOU, true).len();
        n_pred += pred.len();
        n_truth += truth.boxes.len();

        let gt = truth.stain_mask.decode()?;
        let predicted = match &fr.stains {
            Some(s) => Some(s.mask.decode()?),
            None => None,
        };
        for (i, &g) in gt.bits().iter().enumerate() {
            let p = predicted.as_ref().is_some_and(|m| m.bits().get(i).copied().unwrap_or(false));
            inter += (p && g) as usize;
            union += (p || g) as usize;
        }
        if let Some(m) = &predicted {
            if m.dims() != gt.dims() {
                return Err(Error::DimensionMismatch {
                    expected: gt.dims(),
                    got: m.dims(),
                });
            }
        }

        for b in &truth.bins {
            bins_total += 1;
            let hit = fr
                .bins
                .iter()
                .flatten()
                .any(|r| r.bin_id == b.bin_id && r.state == b.state);
            bins_ok += hit as usize;
        }

        people += truth.people.len();
        if let Some(m) = &fr.mapping {
            let boxes: Vec<DetectionBox> = m.objects.iter().map(|o| o.bbox).collect();
            let truth_boxes: Vec<DetectionBox> = truth.people.iter().map(|p| p.bbox).collect();
            for (i, j) in match_boxes(&boxes, &truth_boxes, MATCH_IOU, false) {
                let (a, b) = (m.objects[i].floor_xy, truth.people[j].floor_xy);
                sq += (a.0 - b.0).powi(2) + (a.1 - b.1).powi(2);
                matched += 1;
            }
        }
    }

    Ok(Metrics {
        frames: frames.len(),
        detection: DetectionMetrics {
            true_positives: tp,
            false_positives: n_pred - tp,
            false_negatives: n_truth - tp,
            precision: ratio(tp, n_pred),
            recall: ratio(tp, n_truth),
        },
        stain_iou: ratio(inter, union),
        bin_accuracy: ratio(bins_ok, bins_total),
        bins_total,
        mapping_rms_m: (matched > 0).then(|| (sq / matched as f64).sqrt()),
        people_matched: matched,
        people_total: people,
    })
}

/// A report that states exactly what the manifest says.
pub fn report_from_manifest(manifest: &GroundTruthManifest) -> Vec<ReportLine> {
    let mut lines = vec![ReportLine::Header {
        format_version: REPORT_VERSION,
        pipelines: vec![Pipeline::Bins, Pipeline::Stains, Pipeline::Litter, Pipeline::Mapping],
        seed: manifest.seed,
    }];
    for f in &manifest.frames {
        lines.push(ReportLine::Frame(FrameReport {
            index: f.index,
            file: f.file.clone(),
            bins: Some(
                f.bins
                    .iter()
                    .map(|b| BinRecord {
                        bin_id: b.bin_id.clone(),
                        state: b.state,
                        interior_std: 0.0,
                        rim_fraction: 1.0,
                    })
                    .collect(),
            ),
            stains: Some(StainSection {
                mask: f.stain_mask.clone(),
                blobs: Vec::new(),
            }),
            litter: Some(f.boxes.clone()),
            mapping: Some(MappingSection {
                calibrated: true,
                objects: f
                    .people
                    .iter()
                    .map(|p| MappedPerson {
                        track_id: p.item,
                        floor_xy: p.floor_xy,
                        bbox: p.bbox,
                    })
                    .collect(),
            }),
        }));
    }
    lines.push(ReportLine::Summary {
        frames: manifest.frames.len(),
        errors: Vec::new(),
        partial: false,
    });
    lines
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::presets::demo_scene;
    use crate::synth::scene::synthesize;

    fn manifest() -> GroundTruthManifest {
        synthesize(&demo_scene(), 2, 3).unwrap().1
    }

    #[test]
    fn manifest_as_report_is_perfect() {
        let m = manifest();
        let metrics = evaluate(&report_from_manifest(&m), &m).unwrap();
        assert!(metrics.detection.true_positives > 0);
        assert_eq!(metrics.detection.precision, 1.0);
        assert_eq!(metrics.detection.recall, 1.0);
        assert_eq!(metrics.stain_iou, 1.0);
        assert_eq!(metrics.bin_accuracy, 1.0);
        assert_eq!(metrics.mapping_rms_m, Some(0.0));
        assert_eq!(metrics.people_matched, metrics.people_total);
    }

    #[test]
    fn empty_report_has_zero_recall() {
        let m = manifest();
        let mut r = report_from_manifest(&m);
        for l in r.iter_mut() {
            if let ReportLine::Frame(f) = l {
                f.litter = Some(Vec::new());
            }
        }
        let metrics = evaluate(&r, &m).unwrap();
        assert_eq!(metrics.detection.recall, 0.0);
    }

    #[test]
    fn one_box_moved_off_target_costs_one_true_positive() {
        let m = manifest();
        let mut r = report_from_manifest(&m);
        let n: usize = m.frames.iter().map(|f| f.boxes.len()).sum();
        if let Some(ReportLine::Frame(f)) = r.iter_mut().find(|l| matches!(l, ReportLine::Frame(_))) {
            let b = &mut f.litter.as_mut().unwrap()[0];
            b.x += b.w * 0.8;
        }
        let metrics = evaluate(&r, &m).unwrap();
        assert_eq!(metrics.detection.precision, (n - 1) as f64 / n as f64);
        assert_eq!(metrics.detection.recall, (n - 1) as f64 / n as f64);
    }

    #[test]
    fn frame_count_mismatch_is_an_error() {
        let m = manifest();
        let mut r = report_from_manifest(&m);
        r.remove(1);
        assert!(evaluate(&r, &m).is_err());
    }

    #[test]
    fn greedy_matching_prefers_the_best_overlap() {
        let t = vec![DetectionBox::new(0.0, 0.0, 10.0, 10.0, 0, 1.0)];
        let p = vec![
            DetectionBox::new(2.0, 0.0, 10.0, 10.0, 0, 0.9),
            DetectionBox::new(0.0, 0.0, 10.0, 10.0, 0, 0.5),
            DetectionBox::new(0.0, 0.0, 10.0, 10.0, 1, 0.5),
        ];
        assert_eq!(match_boxes(&p, &t, 0.5, true), vec![(1, 0)]);
    }
}
