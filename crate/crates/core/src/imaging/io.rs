//! PNG and binary PNM (PPM/PGM) reading and writing.

use std::path::Path;

use image::{DynamicImage, GrayImage, ImageFormat, RgbImage};

use super::{BinaryMask, ImageBuffer};
use crate::error::{Error, Result};

/// Load an 8-bit image; gray sources stay single-channel, everything else is
/// converted to RGB.
pub fn read_image(path: impl AsRef<Path>) -> Result<ImageBuffer> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let format = ImageFormat::from_path(path).or_else(|_| image::guess_format(&bytes))?;
    let dynamic = image::load_from_memory_with_format(&bytes, format)?;
    Ok(from_dynamic(dynamic))
}

pub fn from_dynamic(dynamic: DynamicImage) -> ImageBuffer {
    match dynamic {
        DynamicImage::ImageLuma8(g) => {
            let (w, h) = g.dimensions();
            ImageBuffer::from_raw(w as usize, h as usize, 1, g.into_raw()).expect("gray buffer")
        }
        other => {
            let rgb = other.to_rgb8();
            let (w, h) = rgb.dimensions();
            ImageBuffer::from_raw(w as usize, h as usize, 3, rgb.into_raw()).expect("rgb buffer")
        }
    }
}

/// Write by extension: `.png`, `.ppm`, `.pgm` (binary PNM).
pub fn write_image(img: &ImageBuffer, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if has_ext(path, "pgm") || has_ext(path, "ppm") {
        let gray;
        let (magic, img) = if has_ext(path, "pgm") {
            gray = if img.channels() == 1 { img.clone() } else { crate::imaging::rgb_to_lab_l(img)? };
            ("P5", &gray)
        } else {
            if img.channels() != 3 {
                return Err(Error::ChannelMismatch { expected: 3, got: img.channels() });
            }
            ("P6", img)
        };
        let mut bytes = format!("{magic}\n{} {}\n255\n", img.width(), img.height()).into_bytes();
        bytes.extend_from_slice(img.data());
        return std::fs::write(path, bytes).map_err(|e| Error::io(path, e));
    }
    let format = ImageFormat::from_path(path)?;
    let (w, h) = (img.width() as u32, img.height() as u32);
    let dynamic = match img.channels() {
        1 => DynamicImage::ImageLuma8(GrayImage::from_raw(w, h, img.data().to_vec()).expect("gray")),
        _ => DynamicImage::ImageRgb8(RgbImage::from_raw(w, h, img.data().to_vec()).expect("rgb")),
    };
    dynamic.save_with_format(path, format)?;
    Ok(())
}

/// Masks are stored as PGM with values {0, 255}.
pub fn write_mask(mask: &BinaryMask, path: impl AsRef<Path>) -> Result<()> {
    write_image(&mask.to_gray(), path)
}

pub fn read_mask(path: impl AsRef<Path>) -> Result<BinaryMask> {
    let img = read_image(path)?;
    let gray = if img.channels() == 1 { img } else { img.channel(0)? };
    BinaryMask::from_gray(&gray)
}

fn has_ext(path: &Path, ext: &str) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case(ext))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_through_every_format() {
        let dir = tempfile::tempdir().unwrap();
        let rgb = ImageBuffer::from_raw(3, 2, 3, (0..18).map(|v| v * 13).collect()).unwrap();
        for name in ["a.png", "a.ppm"] {
            let p = dir.path().join(name);
            write_image(&rgb, &p).unwrap();
            assert_eq!(read_image(&p).unwrap(), rgb);
        }
        let gray = ImageBuffer::from_raw(4, 1, 1, vec![0, 7, 200, 255]).unwrap();
        for name in ["g.png", "g.pgm"] {
            let p = dir.path().join(name);
            write_image(&gray, &p).unwrap();
            assert_eq!(read_image(&p).unwrap(), gray);
        }
        let mask = BinaryMask::from_fn(5, 3, |x, y| (x + y) % 2 == 0);
        let p = dir.path().join("m.pgm");
        write_mask(&mask, &p).unwrap();
        assert_eq!(std::fs::read(&p).unwrap()[..2], *b"P5");
        assert_eq!(read_mask(&p).unwrap(), mask);
    }

    #[test]
    fn missing_file_reports_path() {
        let err = read_image("/nonexistent/frame.png").unwrap_err();
        assert!(err.to_string().contains("/nonexistent/frame.png"));
    }
}
