//! Single filled ellipse on a flat background.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::imaging::draw::fill_ellipse_rgb;
use crate::imaging::{Ellipse, ImageBuffer};

pub const ELLIPSE_SCENE_SIZE: (usize, usize) = (320, 240);

/// Saturated ellipse with randomized pose on a gray background. The axis
/// ratio stays below 0.85 so the rotation is well defined.
pub fn ellipse_scene(seed: u64) -> (ImageBuffer, Ellipse) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = ELLIPSE_SCENE_SIZE;
    let a: f64 = rng.gen_range(25.0..80.0);
    let b = a * rng.gen_range(0.4..0.85);
    let theta = rng.gen_range(0.0..std::f64::consts::PI);
    let e0 = Ellipse::new(0.0, 0.0, a, b, theta);
    let (x0, y0, x1, y1) = e0.bounds();
    let cx = rng.gen_range((-x0 + 4.0)..(w as f64 - x1 - 4.0));
    let cy = rng.gen_range((-y0 + 4.0)..(h as f64 - y1 - 4.0));
    let e = Ellipse::new(cx, cy, a, b, theta);
    let mut img = ImageBuffer::rgb(w, h, [128, 128, 128]).expect("fixed size");
    let hue = [[200, 40, 40], [40, 170, 60], [40, 80, 210], [220, 180, 30]][rng.gen_range(0..4)];
    fill_ellipse_rgb(&mut img, &e, hue);
    (img, e)
}
