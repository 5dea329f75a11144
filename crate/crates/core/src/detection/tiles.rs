use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::Rect;

/// Overlapping square tiles covering a frame.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TilePlan {
    pub frame_w: usize,
    pub frame_h: usize,
    pub tile_size: usize,
    pub overlap: usize,
    pub tiles: Vec<Rect>,
}

impl TilePlan {
    pub fn len(&self) -> usize {
        self.tiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tiles.is_empty()
    }

    /// One tile spanning the whole frame.
    pub fn whole_frame(frame_w: usize, frame_h: usize) -> Self {
        Self {
            frame_w,
            frame_h,
            tile_size: frame_w.max(frame_h),
            overlap: 0,
            tiles: vec![Rect::new(0, 0, frame_w, frame_h)],
        }
    }
}

/// Tile origins along one axis: multiples of the stride, with the last tile
/// pushed back to end flush with the border.
pub fn axis_origins(dim: usize, tile: usize, stride: usize) -> Vec<usize> {
    if dim <= tile {
        return vec![0];
    }
    let n = (dim - tile).div_ceil(stride) + 1;
    let mut origins: Vec<usize> = (0..n - 1).map(|i| i * stride).collect();
    origins.push(dim - tile);
    origins
}

pub fn plan_tiles(frame_w: usize, frame_h: usize, tile_size: usize, overlap: usize) -> Result<TilePlan> {
    if overlap >= tile_size {
        return Err(Error::param(
            "overlap",
            format!("overlap {overlap} must be smaller than tile size {tile_size}"),
        ));
    }
    if frame_w == 0 || frame_h == 0 || tile_size > frame_w.max(frame_h) {
        return Err(Error::param(
            "tile_size",
            format!("tile {tile_size} does not fit a {frame_w}x{frame_h} frame"),
        ));
    }
    let stride = tile_size - overlap;
    let xs = axis_origins(frame_w, tile_size, stride);
    let ys = axis_origins(frame_h, tile_size, stride);
    let (tw, th) = (tile_size.min(frame_w), tile_size.min(frame_h));
    let tiles = ys
        .iter()
        .flat_map(|&y| xs.iter().map(move |&x| Rect::new(x, y, tw, th)))
        .collect();
    Ok(TilePlan {
        frame_w,
        frame_h,
        tile_size,
        overlap,
        tiles,
    })
}

/// Like [`plan_tiles`], but a tile larger than the frame shrinks to the
/// frame's long side (and the overlap with it).
pub fn plan_tiles_clamped(frame_w: usize, frame_h: usize, tile_size: usize, overlap: usize) -> Result<TilePlan> {
    let tile = tile_size.min(frame_w.max(frame_h));
    plan_tiles(frame_w, frame_h, tile, overlap.min(tile.saturating_sub(1)))
}
