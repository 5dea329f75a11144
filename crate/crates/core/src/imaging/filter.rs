use super::ImageBuffer;
use crate::error::{Error, Result};

/// Normalized 1-D Gaussian taps with radius `ceil(3 * sigma)`.
pub fn gaussian_kernel(sigma: f64) -> Result<Vec<f64>> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::param("sigma", format!("must be positive, got {sigma}")));
    }
    let radius = (3.0 * sigma).ceil() as i64;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    Ok(k)
}

/// Separable Gaussian smoothing of a gray image with clamp-to-border.
pub fn gaussian_blur(src: &ImageBuffer, sigma: f64) -> Result<ImageBuffer> {
    src.require_channels(1)?;
    let kernel = gaussian_kernel(sigma)?;
    let r = (kernel.len() / 2) as isize;
    let (w, h) = src.dims();

    let mut horiz = vec![0f64; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, &kv) in kernel.iter().enumerate() {
                acc += kv * src.get_clamped(x as isize + k as isize - r, y as isize, 0) as f64;
            }
            horiz[y * w + x] = acc;
        }
    }

    let mut out = src.clone();
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, &kv) in kernel.iter().enumerate() {
                let yy = (y as isize + k as isize - r).clamp(0, h as isize - 1) as usize;
                acc += kv * horiz[yy * w + x];
            }
            out.set(x, y, 0, acc.round().clamp(0.0, 255.0) as u8);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_image_is_unchanged() {
        let img = ImageBuffer::filled(17, 9, 1, 93).unwrap();
        assert_eq!(gaussian_blur(&img, 2.3).unwrap(), img);
    }

    #[test]
    fn impulse_center_weight_matches_2d_gaussian() {
        // continuous peak 1/(2*pi) = 0.159; truncated discrete kernel gives 0.1593
        let k = gaussian_kernel(1.0).unwrap();
        let center = k[k.len() / 2] * k[k.len() / 2];
        assert!((center - 0.159).abs() < 1e-3, "{center}");

        let mut img = ImageBuffer::new(21, 21, 1).unwrap();
        img.set(10, 10, 0, 255);
        let out = gaussian_blur(&img, 1.0).unwrap();
        let mass: f64 = out.data().iter().map(|&v| v as f64).sum();
        let frac = out.get(10, 10, 0) as f64 / mass;
        assert!((frac - 0.159).abs() < 0.01, "{frac}");
    }

    #[test]
    fn interior_mean_is_preserved() {
        let data: Vec<u8> = (0..40 * 40).map(|i| ((i * 97) % 256) as u8).collect();
        let img = ImageBuffer::from_raw(40, 40, 1, data).unwrap();
        let out = gaussian_blur(&img, 1.0).unwrap();
        // compare over a window whose kernel support stays inside the image
        let mean = |im: &ImageBuffer| {
            let mut s = 0.0;
            for y in 0..40 {
                for x in 0..40 {
                    s += im.get(x, y, 0) as f64;
                }
            }
            s / 1600.0
        };
        assert!((mean(&img) - mean(&out)).abs() < 2.0);
    }

    #[test]
    fn rejects_non_positive_sigma() {
        let img = ImageBuffer::new(3, 3, 1).unwrap();
        assert!(gaussian_blur(&img, 0.0).is_err());
        assert!(gaussian_blur(&img, -1.0).is_err());
        assert!(gaussian_blur(&img, f64::NAN).is_err());
    }
}
