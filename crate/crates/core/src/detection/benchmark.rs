//! Latency harness over a list of frame resolutions.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{detect_sliced, detect_whole, plan_tiles_clamped, Detector};
use crate::error::{Error, Result};
use crate::imaging::ImageBuffer;

/// Camera resolutions of the reference latency experiment.
pub const REFERENCE_RESOLUTIONS: [(usize, usize); 6] = [
    (640, 480),
    (720, 576),
    (1024, 768),
    (1280, 720),
    (1920, 1080),
    (3840, 2160),
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingRecord {
    pub resolution: (usize, usize),
    pub sliced: bool,
    pub mean_ms: f64,
    pub p95_ms: f64,
    pub n_runs: usize,
    /// Detector invocations per frame.
    pub detector_calls: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkParams {
    pub tile_size: usize,
    pub overlap: usize,
    pub merge_iou: f64,
    pub seed: u64,
}

impl Default for BenchmarkParams {
    fn default() -> Self {
        Self {
            tile_size: 640,
            overlap: 128,
            merge_iou: 0.5,
            seed: 0,
        }
    }
}

/// Noisy gray frame with a sprinkling of coloured squares.
pub fn benchmark_frame(width: usize, height: usize, seed: u64) -> ImageBuffer {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut img = ImageBuffer::new(width, height, 3).expect("non-empty resolution");
    for v in img.data_mut().iter_mut() {
        *v = rng.gen_range(70..110);
    }
    let n = (width * height / 40_000).max(4);
    for _ in 0..n {
        let s = rng.gen_range(6..24);
        let x = rng.gen_range(0..width.saturating_sub(s).max(1)) as i64;
        let y = rng.gen_range(0..height.saturating_sub(s).max(1)) as i64;
        let color = [[220, 30, 30], [30, 200, 40], [40, 60, 220]][rng.gen_range(0..3)];
        crate::imaging::draw::fill_rect_rgb(&mut img, x, y, s as i64, s as i64, color);
    }
    img
}

/// Wall-clock latency of whole-frame or sliced inference per resolution.
/// Only the inference call is timed; frame synthesis and one warm-up call
/// per resolution are excluded.
pub fn benchmark(
    detector: &dyn Detector,
    resolutions: &[(usize, usize)],
    sliced: bool,
    n_runs: usize,
    params: &BenchmarkParams,
) -> Result<Vec<TimingRecord>> {
    if n_runs < 3 {
        return Err(Error::param("n_runs", format!("need at least 3 runs, got {n_runs}")));
    }
    let mut records = Vec::with_capacity(resolutions.len());
    for &(w, h) in resolutions {
        let frame = benchmark_frame(w, h, params.seed);
        let plan = if sliced {
            Some(plan_tiles_clamped(w, h, params.tile_size, params.overlap)?)
        } else {
            None
        };
        let mut times = Vec::with_capacity(n_runs);
        // one untimed call so the first timed run does not pay for cold caches
        for run in 0..=n_runs {
            let start = Instant::now();
            match &plan {
                Some(plan) => detect_sliced(&frame, detector, plan, params.merge_iou)?,
                None => detect_whole(&frame, detector)?,
            };
            if run > 0 {
                times.push(start.elapsed().as_secs_f64() * 1e3);
            }
        }
        let mean_ms = times.iter().sum::<f64>() / n_runs as f64;
        times.sort_by(f64::total_cmp);
        let p95_idx = ((0.95 * n_runs as f64).ceil() as usize).clamp(1, n_runs) - 1;
        records.push(TimingRecord {
            resolution: (w, h),
            sliced,
            mean_ms,
            p95_ms: times[p95_idx],
            n_runs,
            detector_calls: plan.as_ref().map_or(1, |p| p.len()),
        });
    }
    Ok(records)
}

/// One table column: a label and one record per resolution.
pub struct TableColumn<'a> {
    pub label: String,
    pub records: &'a [TimingRecord],
}

/// Markdown table with one row per resolution: the no-slice columns first,
/// then the sliced ones, mean latency in milliseconds.
pub fn render_table(columns: &[TableColumn<'_>]) -> String {
    let mut ordered: Vec<&TableColumn> = columns.iter().filter(|c| !is_sliced(c)).collect();
    ordered.extend(columns.iter().filter(|c| is_sliced(c)));
    let mut out = String::from("| Resolution |");
    for c in &ordered {
        let mode = if is_sliced(c) { "slice" } else { "no slice" };
        out.push_str(&format!(" {mode}: {} |", c.label));
    }
    out.push_str("\n|---|");
    out.push_str(&"---:|".repeat(ordered.len()));
    out.push('\n');
    let rows = ordered.first().map_or(0, |c| c.records.len());
    for r in 0..rows {
        let (w, h) = ordered[0].records[r].resolution;
        out.push_str(&format!("| {w} × {h} |"));
        for c in &ordered {
            out.push_str(&format!(" {:.1} |", c.records[r].mean_ms));
        }
        out.push('\n');
    }
    out
}

fn is_sliced(c: &TableColumn<'_>) -> bool {
    c.records.first().is_some_and(|r| r.sliced)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detection::{reference_detector, BlobClass, BlobManifest};

    fn detector() -> crate::detection::DetectorHandle {
        reference_detector(BlobManifest::new(vec![BlobClass {
            id: 0,
            name: "red".into(),
            color: [220, 30, 30],
            tolerance: 40,
        }]))
        .unwrap()
    }

    #[test]
    fn one_record_per_resolution_and_call_counts_grow() {
        let det = detector();
        let res = [(640, 480), (3840, 2160)];
        let sliced = benchmark(det.as_ref(), &res, true, 3, &BenchmarkParams::default()).unwrap();
        assert_eq!(sliced.len(), 2);
        assert_eq!(sliced[0].detector_calls, 1);
        assert_eq!(sliced[1].detector_calls, 32);
        assert!(sliced.iter().all(|r| r.n_runs == 3 && r.mean_ms > 0.0));
    }

    #[test]
    fn rejects_too_few_runs() {
        assert!(benchmark(detector().as_ref(), &[(640, 480)], false, 2, &BenchmarkParams::default()).is_err());
    }

    #[test]
    fn sliced_is_slower_than_whole_frame() {
        let det = detector();
        let res = [(1280, 720), (1920, 1080)];
        let p = BenchmarkParams::default();
        let whole = benchmark(det.as_ref(), &res, false, 3, &p).unwrap();
        let sliced = benchmark(det.as_ref(), &res, true, 3, &p).unwrap();
        for (w, s) in whole.iter().zip(&sliced) {
            assert!(s.mean_ms >= w.mean_ms, "{s:?} vs {w:?}");
        }
    }

    #[test]
    fn table_has_expected_shape() {
        let rec = |sliced| {
            REFERENCE_RESOLUTIONS
                .iter()
                .map(|&r| TimingRecord { resolution: r, sliced, mean_ms: 1.0, p95_ms: 1.0, n_runs: 3, detector_calls: 1 })
                .collect::<Vec<_>>()
        };
        let (a, b) = (rec(true), rec(false));
        let table = render_table(&[
            TableColumn { label: "reference".into(), records: &a },
            TableColumn { label: "reference".into(), records: &b },
        ]);
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines.len(), 2 + 6);
        assert_eq!(lines[0], "| Resolution | no slice: reference | slice: reference |");
        assert!(lines[7].starts_with("| 3840 × 2160 |"));
    }
}
