//! Color-space conversions.
//!
//! Hue is stored scaled from `[0, 360)` degrees to `[0, 255]` so every channel
//! uses the full 8-bit range. This is NOT the `[0, 180]` convention some
//! libraries use.

use super::ImageBuffer;
use crate::error::Result;

/// Hexcone HSV of one pixel, all components in `[0, 255]`.
pub fn hsv_pixel(rgb: [u8; 3]) -> [u8; 3] {
    let [r, g, b] = rgb.map(f64::from);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let v = max;
    if delta == 0.0 {
        return [0, 0, v as u8];
    }
    let s = 255.0 * delta / max;
    let hue_deg = if max == r {
        60.0 * ((g - b) / delta).rem_euclid(6.0)
    } else if max == g {
        60.0 * ((b - r) / delta + 2.0)
    } else {
        60.0 * ((r - g) / delta + 4.0)
    };
    let h = (hue_deg * 255.0 / 360.0).round().min(255.0);
    [h as u8, s.round() as u8, v as u8]
}

/// Inverse of [`hsv_pixel`] up to 8-bit rounding.
pub fn rgb_pixel(hsv: [u8; 3]) -> [u8; 3] {
    let h = hsv[0] as f64 * 360.0 / 255.0;
    let s = hsv[1] as f64 / 255.0;
    let v = hsv[2] as f64;
    let c = v * s;
    let hp = (h / 60.0) % 6.0;
    let x = c * (1.0 - ((hp % 2.0) - 1.0).abs());
    let (r, g, b) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    [r, g, b].map(|ch| (ch + m).round().clamp(0.0, 255.0) as u8)
}

pub fn rgb_to_hsv(src: &ImageBuffer) -> Result<ImageBuffer> {
    map_rgb(src, hsv_pixel)
}

pub fn hsv_to_rgb(src: &ImageBuffer) -> Result<ImageBuffer> {
    map_rgb(src, rgb_pixel)
}

fn map_rgb(src: &ImageBuffer, f: impl Fn([u8; 3]) -> [u8; 3]) -> Result<ImageBuffer> {
    src.require_channels(3)?;
    let mut out = src.clone();
    for px in out.data_mut().chunks_exact_mut(3) {
        let v = f([px[0], px[1], px[2]]);
        px.copy_from_slice(&v);
    }
    Ok(out)
}

fn srgb_to_linear(c: f64) -> f64 {
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

/// CIE L* of an sRGB pixel (D65), in `[0, 100]`.
pub fn lightness(rgb: [u8; 3]) -> f64 {
    let [r, g, b] = rgb.map(|c| srgb_to_linear(c as f64 / 255.0));
    let y = 0.2126 * r + 0.7152 * g + 0.0722 * b;
    const EPS: f64 = 216.0 / 24389.0;
    const KAPPA: f64 = 24389.0 / 27.0;
    if y > EPS {
        116.0 * y.cbrt() - 16.0
    } else {
        KAPPA * y
    }
}

/// L* channel scaled to `[0, 255]`.
pub fn rgb_to_lab_l(src: &ImageBuffer) -> Result<ImageBuffer> {
    src.require_channels(3)?;
    let mut lut = std::collections::HashMap::new();
    let data = src
        .data()
        .chunks_exact(3)
        .map(|px| {
            let key = [px[0], px[1], px[2]];
            *lut.entry(key)
                .or_insert_with(|| (lightness(key) * 2.55).round().clamp(0.0, 255.0) as u8)
        })
        .collect();
    ImageBuffer::from_raw(src.width(), src.height(), 1, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn px(rgb: [u8; 3]) -> ImageBuffer {
        ImageBuffer::rgb(1, 1, rgb).unwrap()
    }

    #[test]
    fn hsv_reference_pixels() {
        assert_eq!(hsv_pixel([255, 0, 0]), [0, 255, 255]);
        let gray = hsv_pixel([128, 128, 128]);
        assert_eq!((gray[1], gray[2]), (0, 128));
        // 210 degrees -> 210 * 255 / 360 = 148.75
        assert_eq!(hsv_pixel([0, 128, 255]), [149, 255, 255]);
    }

    #[test]
    fn achromatic_pixels_have_zero_saturation() {
        for v in 0..=255u8 {
            assert_eq!(hsv_pixel([v, v, v])[1], 0);
        }
    }

    #[test]
    fn hsv_rejects_gray_input() {
        let gray = ImageBuffer::new(2, 2, 1).unwrap();
        assert!(rgb_to_hsv(&gray).is_err());
        assert!(rgb_to_lab_l(&gray).is_err());
    }

    #[test]
    fn hsv_round_trip_is_close() {
        for &rgb in &[[10u8, 200, 30], [250, 250, 10], [90, 20, 140], [33, 33, 34]] {
            let back = rgb_pixel(hsv_pixel(rgb));
            for c in 0..3 {
                assert!((back[c] as i32 - rgb[c] as i32).abs() <= 3, "{rgb:?} -> {back:?}");
            }
        }
    }

    #[test]
    fn lab_lightness_reference_pixels() {
        assert_eq!(rgb_to_lab_l(&px([255, 255, 255])).unwrap().get(0, 0, 0), 255);
        assert_eq!(rgb_to_lab_l(&px([0, 0, 0])).unwrap().get(0, 0, 0), 0);
        // sRGB 119 -> linear 0.1845 -> L* 50.0 -> 127.6
        let l = rgb_to_lab_l(&px([119, 119, 119])).unwrap().get(0, 0, 0) as i32;
        assert!((l - 127).abs() <= 2, "L = {l}");
    }
}
