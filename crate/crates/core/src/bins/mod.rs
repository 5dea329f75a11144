//! Bin fullness from one frame: interior heterogeneity of the saturation
//! channel and visibility of the far rim.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{
    canny, dilate, erode, gaussian_blur, gaussian_kernel, hough_ellipse, BinaryMask, Ellipse,
    HoughParams, ImageBuffer, Rect,
};

/// Region enclosing the bin opening, in frame coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BinRoi {
    pub rect: Rect,
}

pub const MIN_ROI_SIDE: usize = 32;

impl BinRoi {
    pub fn new(rect: Rect) -> Self {
        Self { rect }
    }

    pub fn validate(&self, width: usize, height: usize) -> Result<()> {
        if !self.rect.fits_in(width, height) {
            return Err(Error::param("roi", format!("{:?} outside {width}x{height} frame", self.rect)));
        }
        if self.rect.w < MIN_ROI_SIDE || self.rect.h < MIN_ROI_SIDE {
            return Err(Error::param(
                "roi",
                format!("{:?} smaller than {MIN_ROI_SIDE}x{MIN_ROI_SIDE}", self.rect),
            ));
        }
        Ok(())
    }
}

/// Which part of the rim must stay visible for an empty verdict.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RimArc {
    /// Half of the perimeter above the center in image coordinates.
    Upper,
    Full,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OccupancyParams {
    /// Interior S standard deviation above which the bin counts as full.
    pub interior_std_threshold: f64,
    /// Visible share of the rim below which the bin counts as full.
    pub rim_visibility_fraction: f64,
    pub canny_low: f64,
    pub canny_high: f64,
    pub blur_sigma: f64,
    /// Minimum perimeter support of an accepted rim ellipse.
    pub min_rim_score: f64,
    pub rim_arc: RimArc,
    /// Measure interior spread on the blurred S channel (the buffer the
    /// edges come from) rather than raw S.
    pub std_on_blurred: bool,
    pub hough: HoughParams,
}

impl Default for OccupancyParams {
    fn default() -> Self {
        Self {
            interior_std_threshold: 38.0,
            rim_visibility_fraction: 0.6,
            canny_low: 40.0,
            canny_high: 120.0,
            blur_sigma: 1.4,
            min_rim_score: 0.5,
            rim_arc: RimArc::Upper,
            std_on_blurred: true,
            hough: HoughParams::default(),
        }
    }
}

impl OccupancyParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.canny_low >= 0.0 && self.canny_low <= self.canny_high) {
            return Err(Error::param(
                "canny_low",
                format!("need 0 <= low <= high, got {} / {}", self.canny_low, self.canny_high),
            ));
        }
        if !(self.rim_visibility_fraction > 0.0 && self.rim_visibility_fraction < 1.0) {
            return Err(Error::param("rim_visibility_fraction", "must lie in (0, 1)"));
        }
        if !(self.min_rim_score > 0.0 && self.min_rim_score <= 1.0) {
            return Err(Error::param("min_rim_score", "must lie in (0, 1]"));
        }
        gaussian_kernel(self.blur_sigma)?;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinState {
    Full,
    Empty,
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OccupancyVerdict {
    pub state: BinState,
    pub interior_std: f64,
    pub rim_fraction: f64,
    pub ellipse: Option<Ellipse>,
}

/// Saturation, blurred saturation and Canny edges of a frame region.
struct RegionChannels {
    origin: (usize, usize),
    raw_s: ImageBuffer,
    blurred_s: ImageBuffer,
}

impl RegionChannels {
    fn compute(frame: &ImageBuffer, rect: Rect, sigma: f64) -> Result<Self> {
        frame.require_channels(3)?;
        let crop = frame.crop(rect)?;
        let raw_s = saturation(&crop);
        let blurred_s = gaussian_blur(&raw_s, sigma)?;
        Ok(Self {
            origin: (rect.x, rect.y),
            raw_s,
            blurred_s,
        })
    }

    fn to_local(&self, e: &Ellipse) -> Ellipse {
        Ellipse {
            cx: e.cx - self.origin.0 as f64,
            cy: e.cy - self.origin.1 as f64,
            ..*e
        }
    }

    fn to_frame(&self, e: &Ellipse) -> Ellipse {
        Ellipse {
            cx: e.cx + self.origin.0 as f64,
            cy: e.cy + self.origin.1 as f64,
            ..*e
        }
    }
}

// S of the hexcone model without computing hue.
fn saturation(rgb: &ImageBuffer) -> ImageBuffer {
    let (w, h) = rgb.dims();
    let data = rgb
        .data()
        .chunks_exact(3)
        .map(|p| crate::imaging::hsv_pixel([p[0], p[1], p[2]])[1])
        .collect();
    ImageBuffer::from_raw(w, h, 1, data).expect("dimensions from source")
}

/// Semi-axis range of a rim that fills the ROI: the ROI is drawn around the
/// opening, so each semi-axis spans at least a quarter of the shorter side.
fn axis_range(roi: Rect) -> (f64, f64) {
    let min_side = roi.w.min(roi.h) as f64;
    let max_side = roi.w.max(roi.h) as f64;
    ((min_side / 4.0).max(3.0), 0.55 * max_side)
}

fn detect_rim_in(region: &RegionChannels, edges: &BinaryMask, params: &OccupancyParams) -> Result<Option<Ellipse>> {
    let local_roi = Rect::new(0, 0, edges.width(), edges.height());
    let candidates = hough_ellipse(edges, local_roi, axis_range(local_roi), &params.hough)?;
    Ok(candidates
        .into_iter()
        .filter(|c| c.score >= params.min_rim_score)
        .max_by(|a, b| a.score.total_cmp(&b.score))
        .map(|c| region.to_frame(&c.ellipse)))
}

/// Highest-scoring rim ellipse whose center lies in the ROI, if any.
pub fn detect_rim(frame: &ImageBuffer, roi: BinRoi, params: &OccupancyParams) -> Result<Option<Ellipse>> {
    params.validate()?;
    roi.validate(frame.width(), frame.height())?;
    let region = RegionChannels::compute(frame, roi.rect, params.blur_sigma)?;
    let edges = canny(&region.blurred_s, params.canny_low, params.canny_high)?;
    detect_rim_in(&region, &edges, params)
}

/// Pixels strictly inside the ellipse, shrunk by two pixels.
fn interior_mask(ellipse: &Ellipse, width: usize, height: usize) -> BinaryMask {
    let inside = BinaryMask::from_fn(width, height, |x, y| ellipse.contains(x as f64, y as f64));
    erode(&inside, 2)
}

fn population_std(img: &ImageBuffer, mask: &BinaryMask) -> Result<f64> {
    let mut n = 0usize;
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for (i, &m) in mask.bits().iter().enumerate() {
        if m {
            let v = img.data()[i] as f64;
            n += 1;
            sum += v;
            sum_sq += v * v;
        }
    }
    if n == 0 {
        return Err(Error::Degenerate("ellipse interior is empty".into()));
    }
    let mean = sum / n as f64;
    Ok((sum_sq / n as f64 - mean * mean).max(0.0).sqrt())
}

fn interior_std_in(region: &RegionChannels, ellipse: &Ellipse, params: &OccupancyParams) -> Result<f64> {
    let s = if params.std_on_blurred { &region.blurred_s } else { &region.raw_s };
    let mask = interior_mask(&region.to_local(ellipse), s.width(), s.height());
    population_std(s, &mask)
}

/// Population standard deviation of S over the eroded ellipse interior.
pub fn interior_heterogeneity(frame: &ImageBuffer, ellipse: &Ellipse, params: &OccupancyParams) -> Result<f64> {
    params.validate()?;
    let (x0, y0, x1, y1) = ellipse.bounds();
    if x0 < 0.0 || y0 < 0.0 || x1 > frame.width() as f64 || y1 > frame.height() as f64 {
        return Err(Error::param("ellipse", "extends outside the frame"));
    }
    // margin so the blur matches a whole-frame blur inside the ellipse
    let margin = (3.0 * params.blur_sigma).ceil() + 1.0;
    let rx0 = (x0 - margin).floor().max(0.0) as usize;
    let ry0 = (y0 - margin).floor().max(0.0) as usize;
    let rx1 = ((x1 + margin).ceil() as usize).min(frame.width());
    let ry1 = ((y1 + margin).ceil() as usize).min(frame.height());
    let region = RegionChannels::compute(frame, Rect::new(rx0, ry0, rx1 - rx0, ry1 - ry0), params.blur_sigma)?;
    interior_std_in(&region, ellipse, params)
}

/// Visible share of the rim: edge pixels inside the 1-px dilated rim raster,
/// over the number of rasterized rim pixels. Uses the upper half-perimeter.
pub fn rim_occlusion(edges: &BinaryMask, ellipse: &Ellipse) -> f64 {
    rim_visibility(edges, ellipse, RimArc::Upper)
}

pub fn rim_visibility(edges: &BinaryMask, ellipse: &Ellipse, arc: RimArc) -> f64 {
    let cy = ellipse.cy;
    let rim = ellipse.raster_perimeter(|_, y| arc == RimArc::Full || y < cy);
    let (w, h) = edges.dims();
    let mut raster = BinaryMask::new(w, h);
    let mut expected = 0usize;
    for &(x, y) in &rim {
        if x >= 0 && y >= 0 && (x as usize) < w && (y as usize) < h {
            raster.set(x as usize, y as usize, true);
        }
        expected += 1;
    }
    if expected == 0 {
        return 0.0;
    }
    let band = dilate(&raster, 1);
    let visible = band
        .bits()
        .iter()
        .zip(edges.bits())
        .filter(|(&b, &e)| b && e)
        .count();
    (visible as f64 / expected as f64).clamp(0.0, 1.0)
}

pub fn classify(frame: &ImageBuffer, roi: BinRoi, params: &OccupancyParams) -> Result<OccupancyVerdict> {
    params.validate()?;
    roi.validate(frame.width(), frame.height())?;
    let region = RegionChannels::compute(frame, roi.rect, params.blur_sigma)?;
    let edges = canny(&region.blurred_s, params.canny_low, params.canny_high)?;
    let Some(ellipse) = detect_rim_in(&region, &edges, params)? else {
        return Ok(OccupancyVerdict {
            state: BinState::Unknown,
            interior_std: 0.0,
            rim_fraction: 0.0,
            ellipse: None,
        });
    };
    let interior_std = match interior_std_in(&region, &ellipse, params) {
        Ok(v) => v,
        Err(Error::Degenerate(_)) => 0.0,
        Err(e) => return Err(e),
    };
    let rim_fraction = rim_visibility(&edges, &region.to_local(&ellipse), params.rim_arc);
    let full = interior_std > params.interior_std_threshold || rim_fraction < params.rim_visibility_fraction;
    Ok(OccupancyVerdict {
        state: if full { BinState::Full } else { BinState::Empty },
        interior_std,
        rim_fraction,
        ellipse: Some(ellipse),
    })
}

/// ROI file: `{bin_id: {x, y, w, h}}`.
pub fn load_rois(path: impl AsRef<Path>) -> Result<BTreeMap<String, BinRoi>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Malformed {
        what: format!("roi file {}", path.display()),
        reason: e.to_string(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinRecord {
    pub bin_id: String,
    pub state: BinState,
    pub interior_std: f64,
    pub rim_fraction: f64,
}

/// Classify every ROI of one frame, in bin id order.
pub fn classify_all(
    frame: &ImageBuffer,
    rois: &BTreeMap<String, BinRoi>,
    params: &OccupancyParams,
) -> Result<Vec<BinRecord>> {
    use rayon::prelude::*;
    rois.par_iter()
        .map(|(id, roi)| {
            let v = classify(frame, *roi, params)?;
            Ok(BinRecord {
                bin_id: id.clone(),
                state: v.state,
                interior_std: v.interior_std,
                rim_fraction: v.rim_fraction,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::bin_view::{render_bin_view, BinViewSpec};

    #[test]
    fn constant_interior_has_zero_spread() {
        let frame = ImageBuffer::rgb(80, 60, [200, 40, 40]).unwrap();
        let e = Ellipse::new(40.0, 30.0, 20.0, 12.0, 0.3);
        let std = interior_heterogeneity(&frame, &e, &OccupancyParams::default()).unwrap();
        assert!(std.abs() < 1e-9);
    }

    #[test]
    fn checkerboard_spread_on_raw_saturation() {
        // S = 26 and 230 from the same max channel
        let lo = [200u8, 180, 180];
        let hi = [200u8, 20, 20];
        assert_eq!(crate::imaging::hsv_pixel(lo)[1], 26);
        assert_eq!(crate::imaging::hsv_pixel(hi)[1], 230);
        let mut frame = ImageBuffer::rgb(100, 100, lo).unwrap();
        for y in 0..100 {
            for x in 0..100 {
                if (x + y) % 2 == 0 {
                    frame.put_rgb(x, y, hi);
                }
            }
        }
        let params = OccupancyParams {
            std_on_blurred: false,
            ..Default::default()
        };
        let e = Ellipse::new(50.0, 50.0, 40.0, 30.0, 0.0);
        let std = interior_heterogeneity(&frame, &e, &params).unwrap();
        // two equally weighted values: std = |hi - lo| / 2
        assert!((std - 102.0).abs() < 0.5, "{std}");
    }

    #[test]
    fn degenerate_interior_is_an_error() {
        let frame = ImageBuffer::rgb(40, 40, [10, 10, 10]).unwrap();
        let e = Ellipse::new(20.0, 20.0, 3.0, 1.5, 0.0);
        assert!(matches!(
            interior_heterogeneity(&frame, &e, &OccupancyParams::default()),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn rim_fraction_bounds() {
        let e = Ellipse::new(50.0, 40.0, 30.0, 15.0, 0.1);
        let mut exact = BinaryMask::new(100, 80);
        for (x, y) in e.raster_perimeter(|_, y| y < e.cy) {
            exact.set(x as usize, y as usize, true);
        }
        assert_eq!(rim_occlusion(&exact, &e), 1.0);
        assert_eq!(rim_occlusion(&BinaryMask::new(100, 80), &e), 0.0);
        let all = BinaryMask::from_fn(100, 80, |_, _| true);
        assert_eq!(rim_occlusion(&all, &e), 1.0);
    }

    #[test]
    fn blank_roi_is_unknown() {
        let frame = ImageBuffer::rgb(120, 100, [90, 90, 90]).unwrap();
        let roi = BinRoi::new(Rect::new(10, 10, 100, 80));
        assert!(detect_rim(&frame, roi, &OccupancyParams::default()).unwrap().is_none());
        let v = classify(&frame, roi, &OccupancyParams::default()).unwrap();
        assert_eq!(v.state, BinState::Unknown);
        assert!(v.ellipse.is_none());
    }

    #[test]
    fn rejects_small_or_outside_roi() {
        let frame = ImageBuffer::rgb(100, 100, [90, 90, 90]).unwrap();
        let p = OccupancyParams::default();
        assert!(classify(&frame, BinRoi::new(Rect::new(0, 0, 20, 50)), &p).is_err());
        assert!(classify(&frame, BinRoi::new(Rect::new(80, 0, 40, 40)), &p).is_err());
    }

    #[test]
    fn empty_and_full_renders() {
        let p = OccupancyParams::default();
        for seed in 0..4 {
            let empty = render_bin_view(&BinViewSpec::random(seed, false, 0.0));
            let v = classify(&empty.image, BinRoi::new(empty.roi), &p).unwrap();
            assert_eq!(v.state, BinState::Empty, "seed {seed}: {v:?}");
            let full = render_bin_view(&BinViewSpec::random(seed, true, 0.0));
            let v = classify(&full.image, BinRoi::new(full.roi), &p).unwrap();
            assert_eq!(v.state, BinState::Full, "seed {seed}: {v:?}");
        }
    }
}
