//! Square binary fiducials: a one-cell black border around a 4x4 payload,
//! surrounded by a one-cell white quiet zone.

use serde::{Deserialize, Serialize};

use super::homography::{estimate_homography, Homography, Point2};
use crate::error::Result;
use crate::imaging::{connected_components, rgb_to_lab_l, BinaryMask, Connectivity, ImageBuffer};

/// Payload codes; bit `r * 4 + c` is the cell in row `r`, column `c`, set
/// for white. Any two codes differ in at least 5 bits under every relative
/// rotation, and each code differs from its own rotations in at least 6.
pub const DICTIONARY: [u16; 16] = [
    0x9C92, 0x2494, 0x0383, 0xDF86, 0xDA9F, 0xC565, 0x931D, 0x5621, 0x6443, 0x3BF6, 0xAA1E, 0xEFA8,
    0x2628, 0x8BFC, 0xACEC, 0xE25D,
];

/// Cells per side including the border.
pub const MARKER_CELLS: usize = 6;

/// Quarter turn clockwise of a payload: cell (r, c) moves to (c, 3 - r).
pub fn rotate_cw(code: u16) -> u16 {
    let mut out = 0u16;
    for r in 0..4 {
        for c in 0..4 {
            if code >> (r * 4 + c) & 1 == 1 {
                out |= 1 << (c * 4 + (3 - r));
            }
        }
    }
    out
}

/// Colour of a marker at cell coordinates `(u, v)` (x right, y down, border
/// spanning `[0, 6)`), or `None` outside the quiet zone.
pub fn marker_cell_value(id: usize, u: f64, v: f64) -> Option<u8> {
    if !(-1.0..7.0).contains(&u) || !(-1.0..7.0).contains(&v) {
        return None;
    }
    if !(0.0..6.0).contains(&u) || !(0.0..6.0).contains(&v) {
        return Some(255);
    }
    let (c, r) = (u.floor() as usize, v.floor() as usize);
    if r == 0 || c == 0 || r == 5 || c == 5 {
        return Some(0);
    }
    let bit = (r - 1) * 4 + (c - 1);
    Some(if DICTIONARY[id] >> bit & 1 == 1 { 255 } else { 0 })
}

/// Paint marker `id` with its outer border corners at `corners`
/// (top-left, top-right, bottom-right, bottom-left of the marker itself),
/// including the quiet zone, with 4x4 supersampling.
pub fn draw_marker(img: &mut ImageBuffer, id: usize, corners: [Point2; 4]) -> Result<()> {
    let cells = [(0.0, 0.0), (6.0, 0.0), (6.0, 6.0), (0.0, 6.0)];
    let to_cells = estimate_homography(&corners, &cells)?;
    let to_img = to_cells.inverse()?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for q in [(-1.0, -1.0), (7.0, -1.0), (7.0, 7.0), (-1.0, 7.0)] {
        let p = to_img.apply(q)?;
        xs.push(p.0);
        ys.push(p.1);
    }
    let fold = |v: &[f64], f: fn(f64, f64) -> f64, init| v.iter().copied().fold(init, f);
    let x0 = fold(&xs, f64::min, f64::INFINITY).floor().max(0.0) as usize;
    let y0 = fold(&ys, f64::min, f64::INFINITY).floor().max(0.0) as usize;
    let x1 = (fold(&xs, f64::max, f64::NEG_INFINITY).ceil().max(0.0) as usize + 1).min(img.width());
    let y1 = (fold(&ys, f64::max, f64::NEG_INFINITY).ceil().max(0.0) as usize + 1).min(img.height());
    const SS: usize = 4;
    for y in y0..y1 {
        for x in x0..x1 {
            let mut hits = 0usize;
            let mut sum = 0usize;
            for sy in 0..SS {
                for sx in 0..SS {
                    let px = x as f64 - 0.5 + (sx as f64 + 0.5) / SS as f64;
                    let py = y as f64 - 0.5 + (sy as f64 + 0.5) / SS as f64;
                    if let Some(v) = to_cells.apply((px, py)).ok().and_then(|(u, v)| marker_cell_value(id, u, v)) {
                        hits += 1;
                        sum += v as usize;
                    }
                }
            }
            if hits == 0 {
                continue;
            }
            let n = (SS * SS) as f64;
            let cover = hits as f64 / n;
            let val = sum as f64 / hits as f64;
            let base = img.pixel(x, y).to_vec();
            let mut rgb = [0u8; 3];
            for c in 0..3 {
                rgb[c] = (base[c] as f64 * (1.0 - cover) + val * cover).round() as u8;
            }
            img.put_rgb(x, y, rgb);
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiducialObservation {
    pub marker_id: usize,
    /// Outer border corners in the marker's own top-left, top-right,
    /// bottom-right, bottom-left order.
    pub corners: [Point2; 4],
}

impl FiducialObservation {
    pub fn center(&self) -> Point2 {
        let (x, y) = self.corners.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
        (x / 4.0, y / 4.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FiducialParams {
    /// Side of the adaptive-threshold window; 0 picks one from the frame size.
    pub block: usize,
    /// A pixel is dark when it is this much below its local mean.
    pub offset: f64,
    /// Smallest accepted side length in pixels.
    pub min_side: f64,
    /// Bit errors corrected when decoding.
    pub max_correction: u32,
}

impl Default for FiducialParams {
    fn default() -> Self {
        Self {
            block: 0,
            offset: 7.0,
            min_side: 18.0,
            max_correction: 1,
        }
    }
}

struct Gray {
    w: usize,
    h: usize,
    v: Vec<f64>,
}

impl Gray {
    fn at(&self, x: isize, y: isize) -> f64 {
        let x = x.clamp(0, self.w as isize - 1) as usize;
        let y = y.clamp(0, self.h as isize - 1) as usize;
        self.v[y * self.w + x]
    }

    fn bilinear(&self, x: f64, y: f64) -> f64 {
        let (fx, fy) = (x.floor(), y.floor());
        let (tx, ty) = (x - fx, y - fy);
        let (ix, iy) = (fx as isize, fy as isize);
        let top = self.at(ix, iy) * (1.0 - tx) + self.at(ix + 1, iy) * tx;
        let bot = self.at(ix, iy + 1) * (1.0 - tx) + self.at(ix + 1, iy + 1) * tx;
        top * (1.0 - ty) + bot * ty
    }
}

fn adaptive_dark(gray: &Gray, block: usize, offset: f64) -> BinaryMask {
    let (w, h) = (gray.w, gray.h);
    let mut integral = vec![0.0f64; (w + 1) * (h + 1)];
    for y in 0..h {
        let mut row = 0.0;
        for x in 0..w {
            row += gray.v[y * w + x];
            integral[(y + 1) * (w + 1) + x + 1] = integral[y * (w + 1) + x + 1] + row;
        }
    }
    let r = block / 2;
    BinaryMask::from_fn(w, h, |x, y| {
        let (x0, y0) = (x.saturating_sub(r), y.saturating_sub(r));
        let (x1, y1) = ((x + r + 1).min(w), (y + r + 1).min(h));
        let s = integral[y1 * (w + 1) + x1] - integral[y0 * (w + 1) + x1] - integral[y1 * (w + 1) + x0]
            + integral[y0 * (w + 1) + x0];
        let mean = s / ((x1 - x0) * (y1 - y0)) as f64;
        gray.v[y * w + x] < mean - offset
    })
}

fn convex_hull(mut pts: Vec<Point2>) -> Vec<Point2> {
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: Point2, a: Point2, b: Point2| (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0);
    let mut lower: Vec<Point2> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Point2> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

fn polygon_area(p: &[Point2]) -> f64 {
    let n = p.len();
    (0..n)
        .map(|i| p[i].0 * p[(i + 1) % n].1 - p[(i + 1) % n].0 * p[i].1)
        .sum::<f64>()
        / 2.0
}

fn dist(a: Point2, b: Point2) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

/// Four hull vertices spanning the largest quadrilateral found by farthest
/// point search, ordered clockwise on screen (y down).
fn quad_corners(hull: &[Point2]) -> Option<[Point2; 4]> {
    if hull.len() < 4 {
        return None;
    }
    let n = hull.len() as f64;
    let c = hull.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0 / n, a.1 + p.1 / n));
    let far = |from: Point2| {
        *hull
            .iter()
            .max_by(|a, b| dist(**a, from).total_cmp(&dist(**b, from)))
            .expect("non-empty hull")
    };
    let p0 = far(c);
    let p1 = far(p0);
    let side = |p: Point2| (p1.0 - p0.0) * (p.1 - p0.1) - (p1.1 - p0.1) * (p.0 - p0.0);
    let p2 = *hull.iter().max_by(|a, b| side(**a).total_cmp(&side(**b)))?;
    let p3 = *hull.iter().min_by(|a, b| side(**a).total_cmp(&side(**b)))?;
    if side(p2) <= 0.0 || side(p3) >= 0.0 {
        return None;
    }
    let mut q = [p0, p1, p2, p3];
    q.sort_by(|a, b| (a.1 - c.1).atan2(a.0 - c.0).total_cmp(&(b.1 - c.1).atan2(b.0 - c.0)));
    Some(q)
}

fn is_convex(q: &[Point2; 4]) -> bool {
    (0..4).all(|i| {
        let (a, b, c) = (q[i], q[(i + 1) % 4], q[(i + 2) % 4]);
        (b.0 - a.0) * (c.1 - b.1) - (b.1 - a.1) * (c.0 - b.0) > 0.0
    })
}

/// Move each side onto the sub-pixel dark-to-light transition and intersect
/// neighbouring sides.
fn refine_corners(gray: &Gray, q: [Point2; 4]) -> Option<[Point2; 4]> {
    let mut lines = Vec::with_capacity(4);
    for i in 0..4 {
        let (a, b) = (q[i], q[(i + 1) % 4]);
        let len = dist(a, b);
        let dir = ((b.0 - a.0) / len, (b.1 - a.1) / len);
        // clockwise on screen, so the outward normal points left of travel
        let normal = (dir.1, -dir.0);
        let reach = (len / MARKER_CELLS as f64 / 2.0).clamp(1.0, 3.0);
        let samples = (len as usize).clamp(8, 64);
        let mut pts = Vec::with_capacity(samples);
        for k in 0..samples {
            let t = 0.15 + 0.7 * (k as f64 + 0.5) / samples as f64;
            let base = (a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1));
            let at = |s: f64| gray.bilinear(base.0 + s * normal.0, base.1 + s * normal.1);
            let (inside, outside) = (at(-reach), at(reach));
            if outside - inside < 20.0 {
                continue;
            }
            let mid = (inside + outside) / 2.0;
            let steps = (reach * 8.0).ceil() as usize * 2;
            let mut prev = (-reach, inside);
            for j in 1..=steps {
                let s = -reach + 2.0 * reach * j as f64 / steps as f64;
                let v = at(s);
                if v >= mid {
                    let f = (mid - prev.1) / (v - prev.1);
                    let s_cross = prev.0 + f * (s - prev.0);
                    pts.push((base.0 + s_cross * normal.0, base.1 + s_cross * normal.1));
                    break;
                }
                prev = (s, v);
            }
        }
        if pts.len() < 4 {
            return None;
        }
        lines.push(fit_line(&pts));
    }
    let mut out = [(0.0, 0.0); 4];
    for i in 0..4 {
        out[i] = intersect(lines[(i + 3) % 4], lines[i])?;
    }
    // reject refinements that wander off the coarse quad
    if (0..4).any(|i| dist(out[i], q[i]) > 3.0) {
        return None;
    }
    Some(out)
}

/// Total least squares line as (point, unit direction).
fn fit_line(pts: &[Point2]) -> (Point2, Point2) {
    let n = pts.len() as f64;
    let (mx, my) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0 / n, a.1 + p.1 / n));
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in pts {
        let (dx, dy) = (p.0 - mx, p.1 - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let angle = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    ((mx, my), (angle.cos(), angle.sin()))
}

fn intersect(l1: (Point2, Point2), l2: (Point2, Point2)) -> Option<Point2> {
    let ((p, d), (q, e)) = (l1, l2);
    let den = d.0 * e.1 - d.1 * e.0;
    if den.abs() < 1e-9 {
        return None;
    }
    let t = ((q.0 - p.0) * e.1 - (q.1 - p.1) * e.0) / den;
    Some((p.0 + t * d.0, p.1 + t * d.1))
}

/// Read the payload through the rectifying homography. Returns the observed
/// code, or `None` if the border or quiet zone do not look like a marker.
fn read_payload(gray: &Gray, q: &[Point2; 4]) -> Option<u16> {
    let cells = [(0.0, 0.0), (6.0, 0.0), (6.0, 6.0), (0.0, 6.0)];
    let to_img: Homography = estimate_homography(&cells, q).ok()?;
    let cell_mean = |u: f64, v: f64| {
        let mut s = 0.0;
        for dy in [-0.2, 0.0, 0.2] {
            for dx in [-0.2, 0.0, 0.2] {
                let p = to_img.apply((u + dx, v + dy)).ok()?;
                s += gray.bilinear(p.0, p.1);
            }
        }
        Some(s / 9.0)
    };
    let mut border = Vec::new();
    let mut quiet = Vec::new();
    for i in 0..6 {
        let c = i as f64 + 0.5;
        for (u, v) in [(c, 0.5), (c, 5.5), (0.5, c), (5.5, c)] {
            border.push(cell_mean(u, v)?);
        }
        for (u, v) in [(c, -0.5), (c, 6.5), (-0.5, c), (6.5, c)] {
            quiet.push(cell_mean(u, v)?);
        }
    }
    let black = border.iter().sum::<f64>() / border.len() as f64;
    let mut quiet_sorted = quiet.clone();
    quiet_sorted.sort_by(f64::total_cmp);
    let white = quiet_sorted[quiet_sorted.len() / 2];
    if white - black < 30.0 {
        return None;
    }
    let thr = (white + black) / 2.0;
    let dark_border = border.iter().filter(|&&v| v < thr).count();
    if dark_border * 10 < border.len() * 9 {
        return None;
    }
    let mut code = 0u16;
    for r in 0..4 {
        for c in 0..4 {
            if cell_mean(c as f64 + 1.5, r as f64 + 1.5)? >= thr {
                code |= 1 << (r * 4 + c);
            }
        }
    }
    Some(code)
}

/// Best dictionary match: `(id, quarter turns, bit errors)`.
pub fn decode(observed: u16, dictionary_size: usize) -> (usize, usize, u32) {
    let mut best = (0, 0, u32::MAX);
    for (id, &code) in DICTIONARY.iter().enumerate().take(dictionary_size) {
        let mut rotated = code;
        for k in 0..4 {
            let d = (observed ^ rotated).count_ones();
            if d < best.2 {
                best = (id, k, d);
            }
            rotated = rotate_cw(rotated);
        }
    }
    best
}

pub fn detect_fiducials(
    frame: &ImageBuffer,
    dictionary_size: usize,
    params: &FiducialParams,
) -> Result<Vec<FiducialObservation>> {
    let dictionary_size = dictionary_size.min(DICTIONARY.len());
    let gray_img = if frame.channels() == 3 { rgb_to_lab_l(frame)? } else { frame.channel(0)? };
    let (w, h) = gray_img.dims();
    let gray = Gray {
        w,
        h,
        v: gray_img.data().iter().map(|&v| v as f64).collect(),
    };
    let block = if params.block > 0 {
        params.block | 1
    } else {
        ((w.min(h) / 8) | 1).max(15)
    };
    let dark = adaptive_dark(&gray, block, params.offset);
    let labels = connected_components(&dark, Connectivity::Eight);
    let mut boundary: Vec<Vec<Point2>> = vec![Vec::new(); labels.component_count()];
    for y in 0..h {
        for x in 0..w {
            let l = labels.get(x, y);
            if l == 0 {
                continue;
            }
            let edge = x == 0
                || y == 0
                || x + 1 == w
                || y + 1 == h
                || labels.get(x - 1, y) != l
                || labels.get(x + 1, y) != l
                || labels.get(x, y - 1) != l
                || labels.get(x, y + 1) != l;
            if edge {
                boundary[l as usize - 1].push((x as f64, y as f64));
            }
        }
    }

    let mut found: Vec<FiducialObservation> = Vec::new();
    for (stats, pts) in labels.stats().iter().zip(boundary) {
        if stats.min_x == 0 || stats.min_y == 0 || stats.max_x + 1 == w || stats.max_y + 1 == h {
            continue;
        }
        if (stats.bbox_width() as f64) < params.min_side * 0.5 || (stats.bbox_height() as f64) < params.min_side * 0.5 {
            continue;
        }
        let hull = convex_hull(pts);
        let Some(q) = quad_corners(&hull) else { continue };
        if !is_convex(&q) || (0..4).any(|i| dist(q[i], q[(i + 1) % 4]) < params.min_side * 0.8) {
            continue;
        }
        // the dark blob must be close to the quadrilateral spanned by its corners
        if polygon_area(&hull) < 0.85 * polygon_area(&q) || polygon_area(&q) < 0.85 * polygon_area(&hull) {
            continue;
        }
        // pixel centers sit half a pixel inside the true outline
        let c = q.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0 / 4.0, a.1 + p.1 / 4.0));
        let grown = q.map(|p| {
            let d = dist(p, c);
            (p.0 + (p.0 - c.0) / d * 0.7, p.1 + (p.1 - c.1) / d * 0.7)
        });
        let Some(refined) = refine_corners(&gray, grown) else { continue };
        if !is_convex(&refined) {
            continue;
        }
        let Some(code) = read_payload(&gray, &refined) else { continue };
        let (id, k, errors) = decode(code, dictionary_size);
        if errors > params.max_correction {
            continue;
        }
        let corners = [refined[k], refined[(k + 1) % 4], refined[(k + 2) % 4], refined[(k + 3) % 4]];
        let obs = FiducialObservation { marker_id: id, corners };
        let center = obs.center();
        if found.iter().any(|f| dist(f.center(), center) < params.min_side * 0.5) {
            continue;
        }
        found.push(obs);
    }
    found.sort_by(|a, b| {
        a.marker_id
            .cmp(&b.marker_id)
            .then(a.corners[0].1.total_cmp(&b.corners[0].1))
            .then(a.corners[0].0.total_cmp(&b.corners[0].0))
    });
    Ok(found)
}
