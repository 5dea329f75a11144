//! Contrast-limited adaptive histogram equalization.

use super::ImageBuffer;
use crate::error::{Error, Result};

/// Per-tile lookup tables plus the tile layout they were computed on.
struct TileMaps {
    x_bounds: Vec<usize>,
    y_bounds: Vec<usize>,
    luts: Vec<[u8; 256]>,
}

/// Equalize a gray image tile by tile.
///
/// `clip_limit` is a multiple of the uniform bin height `tile_pixels / 256`;
/// `f64::INFINITY` disables clipping. Excess counts are spread uniformly over
/// all bins and each output pixel blends the four surrounding tile mappings
/// bilinearly.
pub fn clahe(src: &ImageBuffer, tile_grid: (usize, usize), clip_limit: f64) -> Result<ImageBuffer> {
    src.require_channels(1)?;
    let (nx, ny) = tile_grid;
    if nx == 0 || ny == 0 {
        return Err(Error::param("tile_grid", "tile counts must be >= 1"));
    }
    if nx > src.width() || ny > src.height() {
        return Err(Error::param(
            "tile_grid",
            format!(
                "{nx}x{ny} tiles do not fit a {}x{} image",
                src.width(),
                src.height()
            ),
        ));
    }
    if clip_limit.is_nan() || clip_limit < 1.0 {
        return Err(Error::param("clip_limit", "must be >= 1.0"));
    }

    let maps = tile_maps(src, nx, ny, clip_limit);
    let cx: Vec<f64> = centers(&maps.x_bounds);
    let cy: Vec<f64> = centers(&maps.y_bounds);
    let xw: Vec<(usize, usize, f64)> = (0..src.width()).map(|x| blend(&cx, x as f64)).collect();

    let mut out = src.clone();
    for y in 0..src.height() {
        let (ty0, ty1, fy) = blend(&cy, y as f64);
        for (x, &(tx0, tx1, fx)) in xw.iter().enumerate() {
            let v = src.get(x, y, 0) as usize;
            let m = |tx: usize, ty: usize| maps.luts[ty * nx + tx][v] as f64;
            let top = m(tx0, ty0) * (1.0 - fx) + m(tx1, ty0) * fx;
            let bot = m(tx0, ty1) * (1.0 - fx) + m(tx1, ty1) * fx;
            let value = top * (1.0 - fy) + bot * fy;
            out.set(x, y, 0, value.round().clamp(0.0, 255.0) as u8);
        }
    }
    Ok(out)
}

fn bounds(len: usize, n: usize) -> Vec<usize> {
    (0..=n).map(|i| i * len / n).collect()
}

fn centers(bounds: &[usize]) -> Vec<f64> {
    bounds
        .windows(2)
        .map(|w| (w[0] + w[1]) as f64 / 2.0 - 0.5)
        .collect()
}

/// Neighbouring tile indices and the weight of the second one.
fn blend(centers: &[f64], p: f64) -> (usize, usize, f64) {
    let last = centers.len() - 1;
    if p <= centers[0] {
        return (0, 0, 0.0);
    }
    if p >= centers[last] {
        return (last, last, 0.0);
    }
    let i = centers.partition_point(|&c| c <= p) - 1;
    let f = (p - centers[i]) / (centers[i + 1] - centers[i]);
    (i, i + 1, f)
}

fn tile_maps(src: &ImageBuffer, nx: usize, ny: usize, clip_limit: f64) -> TileMaps {
    let x_bounds = bounds(src.width(), nx);
    let y_bounds = bounds(src.height(), ny);
    let mut luts = Vec::with_capacity(nx * ny);
    for ty in 0..ny {
        for tx in 0..nx {
            let mut hist = [0u64; 256];
            for y in y_bounds[ty]..y_bounds[ty + 1] {
                for x in x_bounds[tx]..x_bounds[tx + 1] {
                    hist[src.get(x, y, 0) as usize] += 1;
                }
            }
            let n = ((x_bounds[tx + 1] - x_bounds[tx]) * (y_bounds[ty + 1] - y_bounds[ty])) as u64;
            if clip_limit.is_finite() {
                let clip = ((clip_limit * n as f64 / 256.0).floor() as u64).max(1);
                clip_histogram(&mut hist, clip);
            }
            luts.push(equalization_lut(&hist, n));
        }
    }
    TileMaps {
        x_bounds,
        y_bounds,
        luts,
    }
}

pub(crate) fn clip_histogram(hist: &mut [u64; 256], clip: u64) {
    let mut excess = 0;
    for h in hist.iter_mut() {
        if *h > clip {
            excess += *h - clip;
            *h = clip;
        }
    }
    let per_bin = excess / 256;
    let remainder = (excess % 256) as usize;
    for h in hist.iter_mut() {
        *h += per_bin;
    }
    if remainder > 0 {
        let step = 256 / remainder;
        for i in (0..256).step_by(step).take(remainder) {
            hist[i] += 1;
        }
    }
}

/// `lut[v] = floor(255 * cdf(v) / n)`.
pub(crate) fn equalization_lut(hist: &[u64; 256], n: u64) -> [u8; 256] {
    let mut lut = [0u8; 256];
    let mut cdf = 0u64;
    for (v, &h) in hist.iter().enumerate() {
        cdf += h;
        lut[v] = ((255 * cdf) / n.max(1)).min(255) as u8;
    }
    lut
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_level_image_maps_to_scaled_cdf() {
        // 75% at 50, 25% at 200 -> floor(255 * 0.75) = 191, 255
        let mut data = vec![50u8; 64];
        for v in data.iter_mut().skip(48) {
            *v = 200;
        }
        let img = ImageBuffer::from_raw(8, 8, 1, data).unwrap();
        let out = clahe(&img, (1, 1), f64::INFINITY).unwrap();
        assert_eq!(out.get(0, 0, 0), 191);
        assert_eq!(out.get(7, 7, 0), 255);
    }

    #[test]
    fn shape_is_preserved() {
        let img = ImageBuffer::from_raw(37, 23, 1, (0..37 * 23).map(|i| (i * 7 % 256) as u8).collect()).unwrap();
        let out = clahe(&img, (4, 3), 2.0).unwrap();
        assert_eq!(out.dims(), img.dims());
    }

    #[test]
    fn grid_larger_than_image_is_rejected() {
        let img = ImageBuffer::new(4, 4, 1).unwrap();
        assert!(clahe(&img, (5, 1), 2.0).is_err());
        assert!(clahe(&img, (1, 5), 2.0).is_err());
        assert!(clahe(&img, (2, 2), 0.5).is_err());
    }

    #[test]
    fn clipping_conserves_mass_and_luts_are_monotone() {
        let mut hist = [0u64; 256];
        hist[10] = 900;
        hist[11] = 50;
        hist[200] = 74;
        let n: u64 = hist.iter().sum();
        clip_histogram(&mut hist, 8);
        assert_eq!(hist.iter().sum::<u64>(), n);
        let lut = equalization_lut(&hist, n);
        assert!(lut.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(lut[255], 255);
    }

    #[test]
    fn single_tile_output_is_monotone_in_input() {
        let data: Vec<u8> = (0..32 * 32).map(|i| ((i * 37) % 251) as u8).collect();
        let img = ImageBuffer::from_raw(32, 32, 1, data).unwrap();
        let out = clahe(&img, (1, 1), 2.0).unwrap();
        let mut pairs: Vec<(u8, u8)> = img.data().iter().copied().zip(out.data().iter().copied()).collect();
        pairs.sort();
        assert!(pairs.windows(2).all(|w| w[0].1 <= w[1].1));
    }
}
