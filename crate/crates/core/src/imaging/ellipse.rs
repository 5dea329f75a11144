//! Ellipse geometry, conic conversion and least-squares conic fitting.

use std::f64::consts::PI;

use nalgebra::{Matrix6, SymmetricEigen, Vector6};
use serde::{Deserialize, Serialize};

/// Rotated ellipse with `a >= b > 0` and `theta` in `[0, pi)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ellipse {
    pub cx: f64,
    pub cy: f64,
    pub a: f64,
    pub b: f64,
    pub theta: f64,
}

/// General conic `A x² + B xy + C y² + D x + E y + F = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Conic(pub [f64; 6]);

impl Ellipse {
    /// Builds an ellipse, swapping axes and wrapping the angle as needed.
    pub fn new(cx: f64, cy: f64, a: f64, b: f64, theta: f64) -> Self {
        let (a, b, theta) = if b > a {
            (b, a, theta + PI / 2.0)
        } else {
            (a, b, theta)
        };
        Self {
            cx,
            cy,
            a: a.abs(),
            b: b.abs(),
            theta: theta.rem_euclid(PI),
        }
    }

    pub fn circle(cx: f64, cy: f64, r: f64) -> Self {
        Self::new(cx, cy, r, r, 0.0)
    }

    pub fn is_valid(&self) -> bool {
        self.a.is_finite()
            && self.b.is_finite()
            && self.cx.is_finite()
            && self.cy.is_finite()
            && self.a >= self.b
            && self.b > 0.0
            && (0.0..PI).contains(&self.theta)
    }

    /// Point on the boundary at parameter angle `t`.
    pub fn point_at(&self, t: f64) -> (f64, f64) {
        let (s, c) = self.theta.sin_cos();
        let (x, y) = (self.a * t.cos(), self.b * t.sin());
        (self.cx + x * c - y * s, self.cy + x * s + y * c)
    }

    /// Value of `(x'/a)² + (y'/b)²` in the ellipse frame; `< 1` strictly inside.
    pub fn normalized_radius_sq(&self, x: f64, y: f64) -> f64 {
        let (s, c) = self.theta.sin_cos();
        let (dx, dy) = (x - self.cx, y - self.cy);
        let u = dx * c + dy * s;
        let v = -dx * s + dy * c;
        (u / self.a).powi(2) + (v / self.b).powi(2)
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        self.normalized_radius_sq(x, y) < 1.0
    }

    /// Ramanujan's perimeter approximation.
    pub fn perimeter(&self) -> f64 {
        let (a, b) = (self.a, self.b);
        let h = ((a - b) / (a + b)).powi(2);
        PI * (a + b) * (1.0 + 3.0 * h / (10.0 + (4.0 - 3.0 * h).sqrt()))
    }

    /// Axis-aligned bounding box `(min_x, min_y, max_x, max_y)`.
    pub fn bounds(&self) -> (f64, f64, f64, f64) {
        let (s, c) = self.theta.sin_cos();
        let hx = ((self.a * c).powi(2) + (self.b * s).powi(2)).sqrt();
        let hy = ((self.a * s).powi(2) + (self.b * c).powi(2)).sqrt();
        (self.cx - hx, self.cy - hy, self.cx + hx, self.cy + hy)
    }

    /// Smallest angular difference between two orientations, modulo pi.
    pub fn angle_diff(t1: f64, t2: f64) -> f64 {
        let d = (t1 - t2).rem_euclid(PI);
        d.min(PI - d)
    }

    pub fn to_conic(&self) -> Conic {
        let (s, c) = self.theta.sin_cos();
        let (ia, ib) = (1.0 / (self.a * self.a), 1.0 / (self.b * self.b));
        let a = c * c * ia + s * s * ib;
        let b = 2.0 * c * s * (ia - ib);
        let cc = s * s * ia + c * c * ib;
        let d = -2.0 * a * self.cx - b * self.cy;
        let e = -b * self.cx - 2.0 * cc * self.cy;
        let f = a * self.cx * self.cx + b * self.cx * self.cy + cc * self.cy * self.cy - 1.0;
        Conic([a, b, cc, d, e, f])
    }

    /// Unique pixels visited by the boundary, in parameter order.
    ///
    /// `keep` filters by sample position, e.g. `|_, y| y < cy` for the upper half.
    pub fn raster_perimeter(&self, keep: impl Fn(f64, f64) -> bool) -> Vec<(i64, i64)> {
        let steps = (self.perimeter() * 4.0).ceil().max(32.0) as usize;
        let mut out: Vec<(i64, i64)> = Vec::with_capacity(steps / 2);
        let mut seen = std::collections::HashSet::new();
        for i in 0..steps {
            let t = 2.0 * PI * i as f64 / steps as f64;
            let (x, y) = self.point_at(t);
            if !keep(x, y) {
                continue;
            }
            let p = (x.round() as i64, y.round() as i64);
            if seen.insert(p) {
                out.push(p);
            }
        }
        out
    }
}

impl Conic {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let [a, b, c, d, e, f] = self.0;
        a * x * x + b * x * y + c * y * y + d * x + e * y + f
    }

    /// First-order geometric distance `|Q| / |grad Q|`.
    pub fn sampson_distance(&self, x: f64, y: f64) -> f64 {
        let [a, b, c, d, e, _] = self.0;
        let gx = 2.0 * a * x + b * y + d;
        let gy = b * x + 2.0 * c * y + e;
        let g = (gx * gx + gy * gy).sqrt();
        if g < 1e-12 {
            f64::INFINITY
        } else {
            self.eval(x, y).abs() / g
        }
    }

    /// Geometric parameters if the conic is a real, non-degenerate ellipse.
    pub fn to_ellipse(&self) -> Option<Ellipse> {
        let [a, b, c, d, e, f] = self.0;
        let det = 4.0 * a * c - b * b;
        if det <= 0.0 || !det.is_finite() {
            return None;
        }
        let cx = (b * e - 2.0 * c * d) / det;
        let cy = (b * d - 2.0 * a * e) / det;
        let f0 = f + (d * cx + e * cy) / 2.0;
        let phi = 0.5 * b.atan2(a - c);
        let (s, co) = phi.sin_cos();
        let l1 = a * co * co + b * s * co + c * s * s;
        let l2 = a * s * s - b * s * co + c * co * co;
        let r1 = -f0 / l1;
        let r2 = -f0 / l2;
        if !(r1 > 0.0 && r2 > 0.0) {
            return None;
        }
        let el = Ellipse::new(cx, cy, r1.sqrt(), r2.sqrt(), phi);
        el.is_valid().then_some(el)
    }
}

/// Algebraic least-squares conic through `points` (at least 5).
///
/// Points are centred and scaled before solving for the unit-norm coefficient
/// vector minimizing the algebraic residual, so the fit is exact for five
/// points in general position.
pub fn fit_ellipse(points: &[(f64, f64)]) -> Option<Ellipse> {
    if points.len() < 5 {
        return None;
    }
    let n = points.len() as f64;
    let (mx, my) = points
        .iter()
        .fold((0.0, 0.0), |(sx, sy), &(x, y)| (sx + x / n, sy + y / n));
    let mean_dist = points
        .iter()
        .map(|&(x, y)| ((x - mx).powi(2) + (y - my).powi(2)).sqrt())
        .sum::<f64>()
        / n;
    if mean_dist < 1e-9 {
        return None;
    }
    let scale = std::f64::consts::SQRT_2 / mean_dist;

    let mut scatter = Matrix6::<f64>::zeros();
    for &(x, y) in points {
        let (x, y) = ((x - mx) * scale, (y - my) * scale);
        let row = Vector6::new(x * x, x * y, y * y, x, y, 1.0);
        scatter += row * row.transpose();
    }
    let eig = SymmetricEigen::new(scatter);
    let (imin, _) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))?;
    let v = eig.eigenvectors.column(imin);
    let conic = Conic([v[0], v[1], v[2], v[3], v[4], v[5]]);
    let e = conic.to_ellipse()?;
    Some(Ellipse::new(
        e.cx / scale + mx,
        e.cy / scale + my,
        e.a / scale,
        e.b / scale,
        e.theta,
    ))
}
