//! Water stain segmentation and per-pixel temporal persistence.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{
    clahe, connected_components, dilate, hsv_pixel, median_filter, remove_small_components,
    rgb_to_lab_l, BinaryMask, Connectivity, ImageBuffer, Rect,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StainParams {
    pub thr_s: u8,
    /// Consecutive unsegmented frames after which a pixel reverts to background.
    pub thr_history: u32,
    pub clahe_clip: f64,
    pub clahe_grid: (usize, usize),
    pub dilate_radius: usize,
    pub median_radius: usize,
    pub min_blob_area: usize,
    /// Select pixels with S below `thr_s` (desaturated reflections); `false`
    /// selects S at or above it instead.
    pub select_low_saturation: bool,
}

impl Default for StainParams {
    fn default() -> Self {
        Self {
            thr_s: 60,
            thr_history: 15,
            clahe_clip: 2.0,
            clahe_grid: (8, 8),
            dilate_radius: 1,
            median_radius: 2,
            min_blob_area: 64,
            select_low_saturation: true,
        }
    }
}

impl StainParams {
    pub fn validate(&self) -> Result<()> {
        if self.thr_history < 1 {
            return Err(Error::param("thr_history", "must be >= 1"));
        }
        if self.min_blob_area < 1 {
            return Err(Error::param("min_blob_area", "must be >= 1"));
        }
        if self.clahe_grid.0 == 0 || self.clahe_grid.1 == 0 {
            return Err(Error::param("clahe_grid", "tile counts must be >= 1"));
        }
        if self.clahe_clip.is_nan() || self.clahe_clip < 1.0 {
            return Err(Error::param("clahe_clip", "must be >= 1.0"));
        }
        Ok(())
    }
}

/// Re-inject equalized lightness by scaling each RGB pixel with the ratio of
/// new to old lightness. Black pixels take the new lightness as gray.
fn recombine_lightness(frame: &ImageBuffer, old_l: &ImageBuffer, new_l: &ImageBuffer) -> ImageBuffer {
    let mut out = frame.clone();
    for (i, px) in out.data_mut().chunks_exact_mut(3).enumerate() {
        let (lo, ln) = (old_l.data()[i] as f64, new_l.data()[i] as f64);
        if lo == 0.0 {
            px.fill(new_l.data()[i]);
            continue;
        }
        let k = ln / lo;
        for c in px.iter_mut() {
            *c = (*c as f64 * k).round().clamp(0.0, 255.0) as u8;
        }
    }
    out
}

/// Stain mask of a single frame.
pub fn segment_frame(frame: &ImageBuffer, params: &StainParams) -> Result<BinaryMask> {
    params.validate()?;
    frame.require_channels(3)?;
    let (w, h) = frame.dims();
    let grid = (params.clahe_grid.0.min(w), params.clahe_grid.1.min(h));
    let l = rgb_to_lab_l(frame)?;
    let enhanced = clahe(&l, grid, params.clahe_clip)?;
    let rgb = recombine_lightness(frame, &l, &enhanced);
    let thr = params.thr_s;
    let low = params.select_low_saturation;
    let mut bits = Vec::with_capacity(w * h);
    for px in rgb.data().chunks_exact(3) {
        let s = hsv_pixel([px[0], px[1], px[2]])[1];
        bits.push(if low { s < thr } else { s >= thr });
    }
    let raw = BinaryMask::from_bits(w, h, bits)?;
    let grown = dilate(&raw, params.dilate_radius);
    let smooth = median_filter(&grown, params.median_radius);
    Ok(remove_small_components(&smooth, Connectivity::Eight, params.min_blob_area))
}

/// Temporal label map of one camera stream.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StainState {
    width: usize,
    height: usize,
    /// Consecutive frames each pixel has not been segmented.
    miss_count: Vec<u32>,
    active: Vec<bool>,
    /// Frame (1-based) at which each active pixel last became active.
    since: Vec<u64>,
    frame: u64,
}

impl StainState {
    pub fn new(width: usize, height: usize) -> Self {
        let n = width * height;
        Self {
            width,
            height,
            miss_count: vec![0; n],
            active: vec![false; n],
            since: vec![0; n],
            frame: 0,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    /// Number of masks consumed so far.
    pub fn frame(&self) -> u64 {
        self.frame
    }

    pub fn miss_count(&self) -> &[u32] {
        &self.miss_count
    }

    pub fn is_active(&self, x: usize, y: usize) -> bool {
        self.active[y * self.width + x]
    }

    pub fn active_mask(&self) -> BinaryMask {
        BinaryMask::from_bits(self.width, self.height, self.active.clone()).expect("state dimensions")
    }

    /// Advance by one frame.
    pub fn update(&mut self, mask: &BinaryMask, thr_history: u32) -> Result<()> {
        if thr_history < 1 {
            return Err(Error::param("thr_history", "must be >= 1"));
        }
        mask.require_dims((self.width, self.height))?;
        self.frame += 1;
        for (i, &seg) in mask.bits().iter().enumerate() {
            if seg {
                if !self.active[i] {
                    self.since[i] = self.frame;
                }
                self.active[i] = true;
                self.miss_count[i] = 0;
            } else {
                self.miss_count[i] = self.miss_count[i].saturating_add(1);
                if self.miss_count[i] >= thr_history {
                    self.active[i] = false;
                }
            }
        }
        Ok(())
    }
}

pub fn update_state(mut state: StainState, mask: &BinaryMask, params: &StainParams) -> Result<StainState> {
    state.update(mask, params.thr_history)?;
    Ok(state)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StainBlob {
    pub centroid: (f64, f64),
    pub area: usize,
    pub bbox: Rect,
    /// Frames since the oldest pixel of the blob became active, inclusive.
    pub age: u64,
}

/// Connected regions of the active mask, in raster order of first pixel.
pub fn stain_report(state: &StainState) -> Vec<StainBlob> {
    let labels = connected_components(&state.active_mask(), Connectivity::Eight);
    let mut oldest = vec![u64::MAX; labels.component_count()];
    for (i, &l) in labels.labels().iter().enumerate() {
        if l > 0 {
            let o = &mut oldest[l as usize - 1];
            *o = (*o).min(state.since[i]);
        }
    }
    labels
        .stats()
        .into_iter()
        .map(|s| StainBlob {
            centroid: s.centroid(),
            area: s.area,
            bbox: Rect::new(s.min_x, s.min_y, s.bbox_width(), s.bbox_height()),
            age: state.frame + 1 - oldest[s.label as usize - 1],
        })
        .collect()
}

/// Segment and track an ordered frame stream.
pub struct StainTracker {
    params: StainParams,
    state: Option<StainState>,
}

impl StainTracker {
    pub fn new(params: StainParams) -> Result<Self> {
        params.validate()?;
        Ok(Self { params, state: None })
    }

    pub fn params(&self) -> &StainParams {
        &self.params
    }

    /// Returns this frame's mask and the blobs active after it.
    pub fn push(&mut self, frame: &ImageBuffer) -> Result<(BinaryMask, Vec<StainBlob>)> {
        let mask = segment_frame(frame, &self.params)?;
        self.push_mask(mask)
    }

    pub fn push_mask(&mut self, mask: BinaryMask) -> Result<(BinaryMask, Vec<StainBlob>)> {
        let (w, h) = mask.dims();
        let state = self.state.get_or_insert_with(|| StainState::new(w, h));
        state.update(&mask, self.params.thr_history)?;
        let blobs = stain_report(state);
        Ok((mask, blobs))
    }

    pub fn state(&self) -> Option<&StainState> {
        self.state.as_ref()
    }
}
