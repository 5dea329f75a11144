//! Small rasterization helpers shared by the synthetic renderers and tests.

use super::{BinaryMask, Ellipse, ImageBuffer};

/// Set every boundary pixel of `ellipse` that falls inside the mask.
pub fn draw_ellipse_perimeter(mask: &mut BinaryMask, ellipse: &Ellipse) {
    for (x, y) in ellipse.raster_perimeter(|_, _| true) {
        if x >= 0 && y >= 0 && (x as usize) < mask.width() && (y as usize) < mask.height() {
            mask.set(x as usize, y as usize, true);
        }
    }
}

/// Paint pixels whose centers lie strictly inside the ellipse.
pub fn fill_ellipse_rgb(img: &mut ImageBuffer, ellipse: &Ellipse, color: [u8; 3]) {
    let (x0, y0, x1, y1) = clip_bounds(img, ellipse.bounds());
    for y in y0..y1 {
        for x in x0..x1 {
            if ellipse.contains(x as f64, y as f64) {
                img.put_rgb(x, y, color);
            }
        }
    }
}

/// Paint the band between `inner` and the same ellipse grown by `thickness`
/// pixels on both axes.
pub fn draw_ellipse_ring_rgb(img: &mut ImageBuffer, inner: &Ellipse, thickness: f64, color: [u8; 3]) {
    let outer = Ellipse::new(
        inner.cx,
        inner.cy,
        inner.a + thickness,
        inner.b + thickness,
        inner.theta,
    );
    let (x0, y0, x1, y1) = clip_bounds(img, outer.bounds());
    for y in y0..y1 {
        for x in x0..x1 {
            let (xf, yf) = (x as f64, y as f64);
            if outer.contains(xf, yf) && !inner.contains(xf, yf) {
                img.put_rgb(x, y, color);
            }
        }
    }
}

pub fn fill_rect_rgb(img: &mut ImageBuffer, x: i64, y: i64, w: i64, h: i64, color: [u8; 3]) {
    let (x0, y0) = (x.max(0) as usize, y.max(0) as usize);
    let x1 = ((x + w).max(0) as usize).min(img.width());
    let y1 = ((y + h).max(0) as usize).min(img.height());
    for yy in y0..y1 {
        for xx in x0..x1 {
            img.put_rgb(xx, yy, color);
        }
    }
}

/// Blend `color` into a convex polygon with 4x4 supersampled coverage.
pub fn fill_convex_polygon_rgb(img: &mut ImageBuffer, poly: &[(f64, f64)], color: [u8; 3]) {
    const SS: usize = 4;
    let (min_x, min_y, max_x, max_y) = poly.iter().fold(
        (f64::MAX, f64::MAX, f64::MIN, f64::MIN),
        |(a, b, c, d), &(x, y)| (a.min(x), b.min(y), c.max(x), d.max(y)),
    );
    let (x0, y0, x1, y1) = clip_bounds(img, (min_x - 1.0, min_y - 1.0, max_x + 1.0, max_y + 1.0));
    for y in y0..y1 {
        for x in x0..x1 {
            let mut inside = 0;
            for sy in 0..SS {
                for sx in 0..SS {
                    let px = x as f64 - 0.5 + (sx as f64 + 0.5) / SS as f64;
                    let py = y as f64 - 0.5 + (sy as f64 + 0.5) / SS as f64;
                    inside += point_in_convex(poly, px, py) as usize;
                }
            }
            if inside == 0 {
                continue;
            }
            let alpha = inside as f64 / (SS * SS) as f64;
            for (c, &target) in color.iter().enumerate() {
                let old = img.get(x, y, c) as f64;
                img.set(x, y, c, (old + (target as f64 - old) * alpha).round() as u8);
            }
        }
    }
}

pub fn point_in_convex(poly: &[(f64, f64)], x: f64, y: f64) -> bool {
    let n = poly.len();
    let mut sign = 0.0;
    for i in 0..n {
        let (ax, ay) = poly[i];
        let (bx, by) = poly[(i + 1) % n];
        let cross = (bx - ax) * (y - ay) - (by - ay) * (x - ax);
        if cross == 0.0 {
            continue;
        }
        if sign == 0.0 {
            sign = cross.signum();
        } else if cross.signum() != sign {
            return false;
        }
    }
    true
}

fn clip_bounds(img: &ImageBuffer, (x0, y0, x1, y1): (f64, f64, f64, f64)) -> (usize, usize, usize, usize) {
    let cx = |v: f64| v.clamp(0.0, img.width() as f64) as usize;
    let cy = |v: f64| v.clamp(0.0, img.height() as f64) as usize;
    (cx(x0.floor()), cy(y0.floor()), cx(x1.ceil() + 1.0), cy(y1.ceil() + 1.0))
}
