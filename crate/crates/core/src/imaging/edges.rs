//! Canny edge detection on an already-smoothed gray image.

use super::{BinaryMask, ImageBuffer};
use crate::error::{Error, Result};

/// Sobel responses with clamp-to-border sampling.
pub fn sobel(src: &ImageBuffer) -> Result<(Vec<f32>, Vec<f32>)> {
    src.require_channels(1)?;
    let (w, h) = src.dims();
    let mut gx = vec![0f32; w * h];
    let mut gy = vec![0f32; w * h];
    for y in 0..h {
        for x in 0..w {
            let p = |dx: isize, dy: isize| src.get_clamped(x as isize + dx, y as isize + dy, 0) as f32;
            gx[y * w + x] = (p(1, -1) + 2.0 * p(1, 0) + p(1, 1)) - (p(-1, -1) + 2.0 * p(-1, 0) + p(-1, 1));
            gy[y * w + x] = (p(-1, 1) + 2.0 * p(0, 1) + p(1, 1)) - (p(-1, -1) + 2.0 * p(0, -1) + p(1, -1));
        }
    }
    Ok((gx, gy))
}

/// Sobel gradients, non-maximum suppression over four direction bins and
/// 8-connected hysteresis. Thresholds are in Sobel magnitude units (the
/// largest attainable magnitude is about 1442).
///
/// No smoothing is applied here; callers blur first.
pub fn canny(src: &ImageBuffer, low: f64, high: f64) -> Result<BinaryMask> {
    if !(0.0 <= low && low <= high) {
        return Err(Error::param(
            "thresholds",
            format!("need 0 <= low <= high, got low={low} high={high}"),
        ));
    }
    let (gx, gy) = sobel(src)?;
    let (w, h) = src.dims();
    let mag: Vec<f32> = gx.iter().zip(&gy).map(|(a, b)| a.hypot(*b)).collect();
    let at = |x: isize, y: isize| {
        let x = x.clamp(0, w as isize - 1) as usize;
        let y = y.clamp(0, h as isize - 1) as usize;
        mag[y * w + x]
    };

    let mut thin = vec![0f32; w * h];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let m = mag[i];
            if m == 0.0 {
                continue;
            }
            let (xi, yi) = (x as isize, y as isize);
            let mut angle = gy[i].atan2(gx[i]).to_degrees();
            if angle < 0.0 {
                angle += 180.0;
            }
            // (backward, forward) neighbours along the gradient direction
            let (back, fwd) = if !(22.5..157.5).contains(&angle) {
                (at(xi - 1, yi), at(xi + 1, yi))
            } else if angle < 67.5 {
                (at(xi - 1, yi - 1), at(xi + 1, yi + 1))
            } else if angle < 112.5 {
                (at(xi, yi - 1), at(xi, yi + 1))
            } else {
                (at(xi + 1, yi - 1), at(xi - 1, yi + 1))
            };
            // Asymmetric comparison keeps exactly one pixel of a plateau pair.
            if m > back && m >= fwd {
                thin[i] = m;
            }
        }
    }

    let (low, high) = (low as f32, high as f32);
    let mut out = BinaryMask::new(w, h);
    let mut stack = Vec::new();
    for start in 0..w * h {
        if thin[start] < high || thin[start] == 0.0 || out.bits()[start] {
            continue;
        }
        out.bits_mut()[start] = true;
        stack.push(start);
        while let Some(i) = stack.pop() {
            let (x, y) = ((i % w) as isize, (i / w) as isize);
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                        continue;
                    }
                    let j = ny as usize * w + nx as usize;
                    if !out.bits()[j] && thin[j] > 0.0 && thin[j] >= low {
                        out.bits_mut()[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
    }
    Ok(out)
}
