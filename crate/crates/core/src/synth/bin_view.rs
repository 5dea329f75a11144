//! Close-up renders of an open cylindrical bin seen from above.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::imaging::draw::{fill_ellipse_rgb, fill_rect_rgb};
use crate::imaging::{Ellipse, ImageBuffer, Rect};

pub const FLOOR_COLOR: [u8; 3] = [180, 170, 150];
pub const RIM_COLOR: [u8; 3] = [40, 160, 60];
pub const BODY_COLOR: [u8; 3] = [30, 110, 45];
pub const INTERIOR_COLOR: [u8; 3] = [70, 66, 60];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinViewSpec {
    pub width: usize,
    pub height: usize,
    /// Inner boundary of the rim.
    pub rim: Ellipse,
    pub rim_thickness: f64,
    /// Visible height of the front wall below the rim, pixels.
    pub body_depth: f64,
    pub full: bool,
    /// Fraction of the upper rim arc hidden behind a foreign object.
    pub arc_occlusion: f64,
    /// Per-channel uniform noise amplitude.
    pub noise: u8,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct BinView {
    pub image: ImageBuffer,
    /// Axis-aligned box around the rim including the ring.
    pub roi: Rect,
    pub rim: Ellipse,
    pub full: bool,
}

impl BinViewSpec {
    /// A bin in a 320x240 frame with randomized pose.
    pub fn random(seed: u64, full: bool, arc_occlusion: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = rng.gen_range(50.0..75.0);
        let b = a * rng.gen_range(0.45..0.7);
        let theta = rng.gen_range(-0.15..0.15);
        let cx = rng.gen_range(140.0..180.0);
        let cy = rng.gen_range(80.0..100.0);
        Self {
            width: 320,
            height: 240,
            rim: Ellipse::new(cx, cy, a, b, theta),
            rim_thickness: 4.0,
            body_depth: rng.gen_range(50.0..80.0),
            full,
            arc_occlusion,
            noise: 3,
            seed,
        }
    }
}

/// Geometry and content of one bin as drawn in an image.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinSprite {
    pub rim: Ellipse,
    pub rim_thickness: f64,
    pub body_depth: f64,
    pub full: bool,
    pub arc_occlusion: f64,
}

impl BinSprite {
    pub fn outer(&self) -> Ellipse {
        let (r, t) = (self.rim, self.rim_thickness);
        Ellipse::new(r.cx, r.cy, r.a + t, r.b + t, r.theta)
    }

    /// Axis-aligned box around the outer rim with a small margin, clipped
    /// to the image.
    pub fn roi(&self, width: usize, height: usize) -> Rect {
        let (x0, y0, x1, y1) = self.outer().bounds();
        let pad = 6.0;
        let rx0 = ((x0 - pad).floor().max(0.0) as usize).min(width);
        let ry0 = ((y0 - pad).floor().max(0.0) as usize).min(height);
        let rx1 = (((x1 + pad).ceil().max(0.0)) as usize).min(width);
        let ry1 = (((y1 + pad).ceil().max(0.0)) as usize).min(height);
        Rect::new(rx0, ry0, rx1.saturating_sub(rx0), ry1.saturating_sub(ry0))
    }
}

pub fn render_bin_view(spec: &BinViewSpec) -> BinView {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0xB1_B1);
    let mut img = ImageBuffer::rgb(spec.width, spec.height, FLOOR_COLOR).expect("non-empty view");
    let sprite = BinSprite {
        rim: spec.rim,
        rim_thickness: spec.rim_thickness,
        body_depth: spec.body_depth,
        full: spec.full,
        arc_occlusion: spec.arc_occlusion,
    };
    draw_bin(&mut img, &sprite, &mut rng);
    add_noise(&mut img, spec.noise, &mut rng);
    BinView {
        roi: sprite.roi(spec.width, spec.height),
        image: img,
        rim: spec.rim,
        full: spec.full,
    }
}

/// Paint front wall, rim, interior and, for full bins, litter inside and
/// over the far rim.
pub fn draw_bin(img: &mut ImageBuffer, sprite: &BinSprite, rng: &mut ChaCha8Rng) {
    let rim = sprite.rim;
    let outer = sprite.outer();

    // front wall: the outer ellipse swept along the image-down axis of the rim frame
    let (s, c) = rim.theta.sin_cos();
    let (bx0, by0, bx1, _) = outer.bounds();
    let reach = outer.a.max(outer.b) + sprite.body_depth;
    let xs = (bx0.floor().max(0.0) as usize)..((bx1.ceil().max(0.0) as usize + 1).min(img.width()));
    let ys = (by0.floor().max(0.0) as usize)..(((rim.cy + reach).ceil().max(0.0) as usize + 1).min(img.height()));
    for y in ys {
        for x in xs.clone() {
            let (dx, dy) = (x as f64 - rim.cx, y as f64 - rim.cy);
            let u = dx * c + dy * s;
            let v = -dx * s + dy * c;
            if u.abs() >= outer.a {
                continue;
            }
            let half = outer.b * (1.0 - (u / outer.a).powi(2)).sqrt();
            if v > -half && v < sprite.body_depth + half {
                img.put_rgb(x, y, BODY_COLOR);
            }
        }
    }
    fill_ellipse_rgb(img, &outer, RIM_COLOR);
    fill_ellipse_rgb(img, &rim, INTERIOR_COLOR);

    if sprite.full {
        let n = rng.gen_range(14..22);
        for _ in 0..n {
            let (px, py) = rim.point_at(rng.gen_range(0.0..std::f64::consts::TAU));
            let k = rng.gen_range(0.0..0.85);
            let (x, y) = (rim.cx + k * (px - rim.cx), rim.cy + k * (py - rim.cy));
            let color = clutter_color(rng);
            let size = rng.gen_range(0.15 * rim.b..0.6 * rim.b);
            if rng.gen_bool(0.5) {
                let w = size * rng.gen_range(0.6..1.6);
                let h = size * rng.gen_range(0.6..1.6);
                fill_clipped_rect(img, &rim, x - w / 2.0, y - h / 2.0, w, h, color);
            } else {
                let blob = Ellipse::new(x, y, size / 2.0, size / 2.0 * rng.gen_range(0.5..1.0), rng.gen_range(0.0..3.1));
                fill_ellipse_clipped(img, &rim, &blob, color);
            }
        }
        // a few items sticking out over the far rim
        let protrusions = rng.gen_range(2..4);
        for _ in 0..protrusions {
            let t0 = rng.gen_range(3.6..5.8);
            let (px, py) = rim.point_at(t0);
            let scale = rim.a / 60.0;
            let blob = Ellipse::new(
                px,
                py,
                scale * rng.gen_range(10.0..18.0),
                scale * rng.gen_range(7.0..12.0),
                rng.gen_range(0.0..3.1),
            );
            fill_ellipse_rgb(img, &blob, clutter_color(rng));
        }
    }

    if sprite.arc_occlusion > 0.0 {
        occlude_upper_arc(img, &rim, sprite.rim_thickness, sprite.arc_occlusion, rng);
    }
}

/// Hide a contiguous share of the upper rim behind a gray, unsaturated pole.
fn occlude_upper_arc(img: &mut ImageBuffer, rim: &Ellipse, thickness: f64, frac: f64, rng: &mut ChaCha8Rng) {
    // parameter angles in (pi, 2pi) map to the upper half for small rotations
    let span = std::f64::consts::PI * frac.clamp(0.0, 1.0);
    let start = std::f64::consts::PI + rng.gen_range(0.0..(std::f64::consts::PI - span).max(1e-9));
    let steps = 64;
    for i in 0..=steps {
        let t = start + span * i as f64 / steps as f64;
        let (x, y) = rim.point_at(t);
        let r = thickness + 2.0;
        let e = Ellipse::circle(x, y, r);
        fill_ellipse_rgb(img, &e, [128, 128, 128]);
    }
}

fn clutter_color(rng: &mut ChaCha8Rng) -> [u8; 3] {
    const PALETTE: [[u8; 3]; 8] = [
        [240, 240, 235],
        [230, 40, 140],
        [110, 20, 230],
        [150, 240, 20],
        [200, 200, 200],
        [150, 40, 160],
        [250, 130, 20],
        [20, 20, 20],
    ];
    PALETTE[rng.gen_range(0..PALETTE.len())]
}

fn fill_clipped_rect(img: &mut ImageBuffer, clip: &Ellipse, x: f64, y: f64, w: f64, h: f64, color: [u8; 3]) {
    let mut layer = img.clone();
    fill_rect_rgb(&mut layer, x.round() as i64, y.round() as i64, w.round() as i64, h.round() as i64, color);
    copy_inside(img, &layer, clip);
}

fn fill_ellipse_clipped(img: &mut ImageBuffer, clip: &Ellipse, e: &Ellipse, color: [u8; 3]) {
    let mut layer = img.clone();
    fill_ellipse_rgb(&mut layer, e, color);
    copy_inside(img, &layer, clip);
}

fn copy_inside(dst: &mut ImageBuffer, src: &ImageBuffer, clip: &Ellipse) {
    let (x0, y0, x1, y1) = clip.bounds();
    let xs = (x0.floor().max(0.0) as usize)..((x1.ceil() as usize + 1).min(dst.width()));
    for y in (y0.floor().max(0.0) as usize)..((y1.ceil() as usize + 1).min(dst.height())) {
        for x in xs.clone() {
            if clip.contains(x as f64, y as f64) {
                let p = src.pixel(x, y);
                dst.put_rgb(x, y, [p[0], p[1], p[2]]);
            }
        }
    }
}

pub(crate) fn add_noise(img: &mut ImageBuffer, amplitude: u8, rng: &mut ChaCha8Rng) {
    if amplitude == 0 {
        return;
    }
    let a = amplitude as i16;
    for v in img.data_mut() {
        *v = (*v as i16 + rng.gen_range(-a..=a)).clamp(0, 255) as u8;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_roi_contains_rim() {
        let spec = BinViewSpec::random(3, true, 0.1);
        let a = render_bin_view(&spec);
        let b = render_bin_view(&spec);
        assert_eq!(a.image, b.image);
        let (x0, y0, x1, y1) = a.rim.bounds();
        assert!(a.roi.contains(x0, y0) && a.roi.contains(x1 - 1.0, y1 - 1.0));
    }

    #[test]
    fn empty_interior_is_uniform() {
        let mut spec = BinViewSpec::random(5, false, 0.0);
        spec.noise = 0;
        let v = render_bin_view(&spec);
        let r = v.rim;
        assert_eq!(v.image.pixel(r.cx as usize, r.cy as usize), &INTERIOR_COLOR);
    }
}
