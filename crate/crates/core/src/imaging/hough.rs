//! Randomized Hough transform for ellipses.
//!
//! Each iteration draws five edge pixels, fits the conic through them and
//! votes for the resulting parameters in a coarse 5-D bin map. The best-voted
//! bins are refined by least squares on nearby edge pixels and finally ranked
//! by perimeter support: the fraction of rasterized boundary pixels that have
//! an edge pixel within one pixel (Chebyshev distance).

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::components::{connected_components, Connectivity};
use super::ellipse::{fit_ellipse, Ellipse};
use super::{BinaryMask, Rect};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HoughParams {
    /// Maximum number of candidates returned.
    pub top_k: usize,
    pub iterations: usize,
    pub seed: u64,
    /// Best-voted bins that get refined and scored.
    pub refine_bins: usize,
    /// Distance band (pixels) of edge pixels used for refinement.
    pub refine_band: f64,
    /// Candidates whose centers and axes all agree within this many pixels
    /// are treated as duplicates.
    pub dedup_px: f64,
}

impl Default for HoughParams {
    fn default() -> Self {
        Self {
            top_k: 5,
            iterations: 2000,
            seed: 0,
            refine_bins: 24,
            refine_band: 1.5,
            dedup_px: 4.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EllipseCandidate {
    pub ellipse: Ellipse,
    pub score: f64,
    pub votes: usize,
}

/// Fraction of the rasterized perimeter of `ellipse` that is supported by an
/// edge pixel in its 3x3 neighbourhood. Pixels outside the mask count as
/// unsupported.
pub fn ellipse_support(edges: &BinaryMask, ellipse: &Ellipse) -> f64 {
    let perimeter = ellipse.raster_perimeter(|_, _| true);
    if perimeter.is_empty() {
        return 0.0;
    }
    let hits = perimeter
        .iter()
        .filter(|&&(x, y)| near_edge(edges, x, y))
        .count();
    hits as f64 / perimeter.len() as f64
}

pub(crate) fn near_edge(edges: &BinaryMask, x: i64, y: i64) -> bool {
    (-1..=1).any(|dy| (-1..=1).any(|dx| edges.get_or_false((x + dx) as isize, (y + dy) as isize)))
}

pub fn hough_ellipse(
    edges: &BinaryMask,
    roi: Rect,
    axis_range: (f64, f64),
    params: &HoughParams,
) -> Result<Vec<EllipseCandidate>> {
    if !roi.fits_in(edges.width(), edges.height()) {
        return Err(Error::param("roi", format!("{roi:?} outside image")));
    }
    let (min_axis, max_axis) = axis_range;
    if !(min_axis >= 3.0 && max_axis >= min_axis) {
        return Err(Error::param(
            "axis_range",
            format!("need 3 <= min <= max, got ({min_axis}, {max_axis})"),
        ));
    }

    let roi_mask = BinaryMask::from_fn(roi.w, roi.h, |x, y| edges.get(roi.x + x, roi.y + y));
    let labels = connected_components(&roi_mask, Connectivity::Eight);
    let mut points: Vec<(f64, f64)> = Vec::new();
    let mut point_component: Vec<u32> = Vec::new();
    let mut components: Vec<Vec<usize>> = vec![Vec::new(); labels.component_count()];
    for y in 0..roi.h {
        for x in 0..roi.w {
            let l = labels.get(x, y);
            if l > 0 {
                components[l as usize - 1].push(points.len());
                points.push(((roi.x + x) as f64, (roi.y + y) as f64));
                point_component.push(l);
            }
        }
    }
    if points.len() < 5 {
        return Ok(Vec::new());
    }

    let valid = |e: &Ellipse| {
        e.a <= max_axis && e.b >= min_axis && roi.contains(e.cx, e.cy)
    };

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut bins: HashMap<[i64; 5], (usize, [f64; 6])> = HashMap::new();
    let mut sample = [(0.0, 0.0); 5];
    for _ in 0..params.iterations {
        let anchor = rng.gen_range(0..points.len());
        let comp = &components[point_component[anchor] as usize - 1];
        let from_component = comp.len() >= 5 && rng.gen_bool(0.5);
        for slot in sample.iter_mut() {
            let idx = if from_component {
                *comp.choose(&mut rng).expect("non-empty component")
            } else {
                rng.gen_range(0..points.len())
            };
            *slot = points[idx];
        }
        if !well_spread(&sample, 2.0) {
            continue;
        }
        let Some(e) = fit_ellipse(&sample) else { continue };
        if !valid(&e) {
            continue;
        }
        let theta_bin = if e.a - e.b < 2.0 {
            0
        } else {
            (e.theta / 0.1).floor() as i64
        };
        let key = [
            (e.cx / 3.0).floor() as i64,
            (e.cy / 3.0).floor() as i64,
            (e.a / 3.0).floor() as i64,
            (e.b / 3.0).floor() as i64,
            theta_bin,
        ];
        let entry = bins.entry(key).or_insert((0, [0.0; 6]));
        entry.0 += 1;
        // orientation is averaged as a doubled-angle vector (period pi)
        let (s2, c2) = (2.0 * e.theta).sin_cos();
        for (acc, v) in entry.1.iter_mut().zip([e.cx, e.cy, e.a, e.b, c2, s2]) {
            *acc += v;
        }
    }

    let mut ranked: Vec<([i64; 5], usize, [f64; 6])> =
        bins.into_iter().map(|(k, (n, s))| (k, n, s)).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    ranked.truncate(params.refine_bins);

    let mut candidates: Vec<EllipseCandidate> = Vec::new();
    for (_, votes, sum) in ranked {
        let n = votes as f64;
        let theta = 0.5 * sum[5].atan2(sum[4]).rem_euclid(2.0 * std::f64::consts::PI);
        let mean = Ellipse::new(sum[0] / n, sum[1] / n, sum[2] / n, sum[3] / n, theta);
        let refined = refine(&points, mean, params.refine_band)
            .filter(valid)
            .unwrap_or(mean);
        let score = ellipse_support(edges, &refined);
        candidates.push(EllipseCandidate {
            ellipse: refined,
            score,
            votes,
        });
    }

    candidates.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(b.votes.cmp(&a.votes))
            .then(a.ellipse.cx.total_cmp(&b.ellipse.cx))
            .then(a.ellipse.cy.total_cmp(&b.ellipse.cy))
    });
    let mut out: Vec<EllipseCandidate> = Vec::new();
    for c in candidates {
        let dup = out.iter().any(|o| {
            let (p, q) = (&o.ellipse, &c.ellipse);
            (p.cx - q.cx).abs() < params.dedup_px
                && (p.cy - q.cy).abs() < params.dedup_px
                && (p.a - q.a).abs() < params.dedup_px
                && (p.b - q.b).abs() < params.dedup_px
        });
        if !dup {
            out.push(c);
        }
        if out.len() == params.top_k {
            break;
        }
    }
    Ok(out)
}

fn well_spread(pts: &[(f64, f64)], min_dist: f64) -> bool {
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let d = (pts[i].0 - pts[j].0).hypot(pts[i].1 - pts[j].1);
            if d < min_dist {
                return false;
            }
        }
    }
    true
}

/// Iterated least-squares refit on edge pixels within `band` of the current
/// boundary.
fn refine(points: &[(f64, f64)], start: Ellipse, band: f64) -> Option<Ellipse> {
    let mut current = start;
    for _ in 0..4 {
        let conic = current.to_conic();
        let inliers: Vec<(f64, f64)> = points
            .iter()
            .copied()
            .filter(|&(x, y)| conic.sampson_distance(x, y) <= band)
            .collect();
        if inliers.len() < 8 {
            return None;
        }
        current = fit_ellipse(&inliers)?;
    }
    Some(current)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::draw::draw_ellipse_perimeter;

    fn render(e: &Ellipse, w: usize, h: usize) -> BinaryMask {
        let mut m = BinaryMask::new(w, h);
        draw_ellipse_perimeter(&mut m, e);
        m
    }

    fn full_roi(m: &BinaryMask) -> Rect {
        Rect::new(0, 0, m.width(), m.height())
    }

    #[test]
    fn recovers_rendered_ellipse() {
        let truth = Ellipse::new(100.0, 80.0, 40.0, 25.0, 0.0);
        let edges = render(&truth, 200, 160);
        let found = hough_ellipse(&edges, full_roi(&edges), (5.0, 80.0), &HoughParams::default()).unwrap();
        let best = found[0].ellipse;
        assert!((best.cx - 100.0).abs() <= 2.0 && (best.cy - 80.0).abs() <= 2.0, "{best:?}");
        assert!((best.a - 40.0).abs() <= 2.0 && (best.b - 25.0).abs() <= 2.0, "{best:?}");
        assert!(Ellipse::angle_diff(best.theta, 0.0) <= 0.1, "{best:?}");
        assert!(found[0].score > 0.95);
        assert!(found.len() <= 5);
        assert!(found.windows(2).all(|w| w[0].score >= w[1].score));
    }

    #[test]
    fn recovers_circle() {
        let truth = Ellipse::circle(70.0, 60.0, 30.0);
        let edges = render(&truth, 140, 120);
        let found = hough_ellipse(&edges, full_roi(&edges), (5.0, 60.0), &HoughParams::default()).unwrap();
        let best = found[0].ellipse;
        assert!((best.cx - 70.0).abs() <= 2.0 && (best.cy - 60.0).abs() <= 2.0);
        assert!((best.a - 30.0).abs() <= 2.0 && (best.b - 30.0).abs() <= 2.0, "{best:?}");
    }

    #[test]
    fn empty_mask_gives_no_candidates() {
        let edges = BinaryMask::new(50, 50);
        assert!(hough_ellipse(&edges, full_roi(&edges), (3.0, 20.0), &HoughParams::default())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn invalid_arguments_are_rejected() {
        let edges = BinaryMask::new(50, 50);
        let p = HoughParams::default();
        assert!(hough_ellipse(&edges, Rect::new(40, 40, 20, 20), (3.0, 20.0), &p).is_err());
        assert!(hough_ellipse(&edges, full_roi(&edges), (2.0, 20.0), &p).is_err());
    }

    #[test]
    fn truth_outscores_displaced_candidates() {
        let truth = Ellipse::new(90.0, 70.0, 35.0, 20.0, 0.4);
        let edges = render(&truth, 180, 140);
        let s_true = ellipse_support(&edges, &truth);
        assert_eq!(s_true, 1.0);
        for i in 0..24 {
            let ang = i as f64 * std::f64::consts::PI / 12.0;
            for d in [5.5, 8.0, 15.0] {
                let moved = Ellipse { cx: truth.cx + d * ang.cos(), cy: truth.cy + d * ang.sin(), ..truth };
                assert!(ellipse_support(&edges, &moved) <= s_true);
            }
        }
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let truth = Ellipse::new(60.0, 50.0, 30.0, 18.0, 1.1);
        let edges = render(&truth, 120, 100);
        let p = HoughParams::default();
        let a = hough_ellipse(&edges, full_roi(&edges), (5.0, 50.0), &p).unwrap();
        let b = hough_ellipse(&edges, full_roi(&edges), (5.0, 50.0), &p).unwrap();
        assert_eq!(a, b);
    }
}
