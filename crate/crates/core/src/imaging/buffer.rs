use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Owned 8-bit raster, row-major with interleaved channels.
#[derive(Clone, PartialEq, Eq)]
pub struct ImageBuffer {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<u8>,
}

impl std::fmt::Debug for ImageBuffer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ImageBuffer")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("channels", &self.channels)
            .finish_non_exhaustive()
    }
}

impl ImageBuffer {
    pub fn new(width: usize, height: usize, channels: usize) -> Result<Self> {
        Self::filled(width, height, channels, 0)
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: u8) -> Result<Self> {
        Self::from_raw(width, height, channels, vec![value; width * height * channels])
    }

    pub fn from_raw(width: usize, height: usize, channels: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0
            || height == 0
            || !(channels == 1 || channels == 3)
            || data.len() != width * height * channels
        {
            return Err(Error::InvalidDimensions {
                width,
                height,
                channels,
                len: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    /// Solid RGB image.
    pub fn rgb(width: usize, height: usize, color: [u8; 3]) -> Result<Self> {
        let mut img = Self::new(width, height, 3)?;
        for px in img.data.chunks_exact_mut(3) {
            px.copy_from_slice(&color);
        }
        Ok(img)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn into_raw(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> u8 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, v: u8) {
        self.data[(y * self.width + x) * self.channels + c] = v;
    }

    /// Sample with coordinates clamped to the border.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize, c: usize) -> u8 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.get(x, y, c)
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> &[u8] {
        let i = (y * self.width + x) * self.channels;
        &self.data[i..i + self.channels]
    }

    #[inline]
    pub fn put_rgb(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let i = (y * self.width + x) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    pub fn require_channels(&self, expected: usize) -> Result<()> {
        if self.channels != expected {
            return Err(Error::ChannelMismatch {
                expected,
                got: self.channels,
            });
        }
        Ok(())
    }

    /// Extract one channel as a gray image.
    pub fn channel(&self, c: usize) -> Result<ImageBuffer> {
        if c >= self.channels {
            return Err(Error::param("channel", format!("{c} out of range")));
        }
        let data = self
            .data
            .chunks_exact(self.channels)
            .map(|px| px[c])
            .collect();
        ImageBuffer::from_raw(self.width, self.height, 1, data)
    }

    /// Copy out a sub-rectangle; the rectangle must lie inside the image.
    pub fn crop(&self, rect: Rect) -> Result<ImageBuffer> {
        if !rect.fits_in(self.width, self.height) {
            return Err(Error::param("rect", format!("{rect:?} outside image")));
        }
        let mut data = Vec::with_capacity(rect.w * rect.h * self.channels);
        for y in rect.y..rect.y + rect.h {
            let start = (y * self.width + rect.x) * self.channels;
            data.extend_from_slice(&self.data[start..start + rect.w * self.channels]);
        }
        ImageBuffer::from_raw(rect.w, rect.h, self.channels, data)
    }

    /// Bilinear resize using pixel-center alignment.
    pub fn resize_bilinear(&self, new_w: usize, new_h: usize) -> Result<ImageBuffer> {
        if new_w == 0 || new_h == 0 {
            return Err(Error::param("size", "target size must be non-zero"));
        }
        if (new_w, new_h) == (self.width, self.height) {
            return Ok(self.clone());
        }
        let sx = self.width as f64 / new_w as f64;
        let sy = self.height as f64 / new_h as f64;
        let ch = self.channels;
        let mut out = vec![0u8; new_w * new_h * ch];
        let xs: Vec<(usize, usize, f64)> = (0..new_w)
            .map(|x| sample_pos((x as f64 + 0.5) * sx - 0.5, self.width))
            .collect();
        for y in 0..new_h {
            let (y0, y1, fy) = sample_pos((y as f64 + 0.5) * sy - 0.5, self.height);
            for (x, &(x0, x1, fx)) in xs.iter().enumerate() {
                for c in 0..ch {
                    let p00 = self.get(x0, y0, c) as f64;
                    let p10 = self.get(x1, y0, c) as f64;
                    let p01 = self.get(x0, y1, c) as f64;
                    let p11 = self.get(x1, y1, c) as f64;
                    let top = p00 + (p10 - p00) * fx;
                    let bot = p01 + (p11 - p01) * fx;
                    let v = top + (bot - top) * fy;
                    out[(y * new_w + x) * ch + c] = v.round().clamp(0.0, 255.0) as u8;
                }
            }
        }
        ImageBuffer::from_raw(new_w, new_h, ch, out)
    }
}

fn sample_pos(s: f64, len: usize) -> (usize, usize, f64) {
    let s = s.clamp(0.0, (len - 1) as f64);
    let i0 = s.floor() as usize;
    let i1 = (i0 + 1).min(len - 1);
    (i0, i1, s - i0 as f64)
}

/// Integer pixel rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl Rect {
    pub fn new(x: usize, y: usize, w: usize, h: usize) -> Self {
        Self { x, y, w, h }
    }

    pub fn fits_in(&self, width: usize, height: usize) -> bool {
        self.w > 0 && self.h > 0 && self.x + self.w <= width && self.y + self.h <= height
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x as f64
            && y >= self.y as f64
            && x <= (self.x + self.w) as f64 - 1.0
            && y <= (self.y + self.h) as f64 - 1.0
    }

    pub fn area(&self) -> usize {
        self.w * self.h
    }
}

/// One boolean per pixel.
#[derive(Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl std::fmt::Debug for BinaryMask {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "BinaryMask({}x{}, {} set)",
            self.width,
            self.height,
            self.count()
        )
    }
}

impl BinaryMask {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn from_bits(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::InvalidDimensions {
                width,
                height,
                channels: 1,
                len: bits.len(),
            });
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            bits,
        }
    }

    /// Nonzero samples of a gray image become set pixels.
    pub fn from_gray(img: &ImageBuffer) -> Result<Self> {
        img.require_channels(1)?;
        Ok(Self {
            width: img.width(),
            height: img.height(),
            bits: img.data().iter().map(|&v| v != 0).collect(),
        })
    }

    /// Gray image with {0, 255}.
    pub fn to_gray(&self) -> ImageBuffer {
        let data = self.bits.iter().map(|&b| if b { 255 } else { 0 }).collect();
        ImageBuffer::from_raw(self.width, self.height, 1, data).expect("mask dimensions")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn bits_mut(&mut self) -> &mut [bool] {
        &mut self.bits
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.bits[y * self.width + x] = v;
    }

    /// Out-of-range coordinates read as unset.
    #[inline]
    pub fn get_or_false(&self, x: isize, y: isize) -> bool {
        x >= 0
            && y >= 0
            && (x as usize) < self.width
            && (y as usize) < self.height
            && self.get(x as usize, y as usize)
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.dims() == other.dims() && self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }

    pub fn transpose(&self) -> BinaryMask {
        BinaryMask::from_fn(self.height, self.width, |x, y| self.get(y, x))
    }

    pub fn require_dims(&self, dims: (usize, usize)) -> Result<()> {
        if self.dims() != dims {
            return Err(Error::DimensionMismatch {
                expected: dims,
                got: self.dims(),
            });
        }
        Ok(())
    }

    /// Intersection-over-union of two same-sized masks; two empty masks give 1.
    pub fn iou(&self, other: &BinaryMask) -> Result<f64> {
        other.require_dims(self.dims())?;
        let (mut inter, mut union) = (0usize, 0usize);
        for (&a, &b) in self.bits.iter().zip(&other.bits) {
            inter += (a && b) as usize;
            union += (a || b) as usize;
        }
        Ok(if union == 0 {
            1.0
        } else {
            inter as f64 / union as f64
        })
    }
}
