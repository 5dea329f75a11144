//! Plane-to-plane projective maps estimated by normalized DLT.

use nalgebra::{DMatrix, Matrix3, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point2 = (f64, f64);

/// Image-to-floor map, scaled so that the bottom-right entry is 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Homography {
    pub h: [[f64; 3]; 3],
    /// Sign of the homogeneous scale on the side of the horizon where the
    /// calibration points lie; points with the other sign are not on the floor.
    #[serde(default = "positive")]
    pub valid_sign: f64,
}

fn positive() -> f64 {
    1.0
}

const HORIZON_EPS: f64 = 1e-12;

impl Homography {
    pub fn identity() -> Self {
        Self::from_matrix(Matrix3::identity()).expect("identity is invertible")
    }

    /// Normalize `m` and check invertibility.
    pub fn from_matrix(m: Matrix3<f64>) -> Result<Self> {
        let s = m[(2, 2)];
        if s.abs() < 1e-12 * m.norm() || !s.is_finite() {
            return Err(Error::Degenerate("homography has a vanishing bottom-right entry".into()));
        }
        let m = m / s;
        if m.determinant().abs() < 1e-14 * m.norm().powi(3) {
            return Err(Error::Degenerate("homography is singular".into()));
        }
        let mut h = [[0.0; 3]; 3];
        for (r, row) in h.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = m[(r, c)];
            }
        }
        Ok(Self { h, valid_sign: 1.0 })
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|r, c| self.h[r][c])
    }

    fn homogeneous(&self, p: Point2) -> Vector3<f64> {
        self.matrix() * Vector3::new(p.0, p.1, 1.0)
    }

    /// Apply the map; errors for points on or beyond the horizon line.
    pub fn apply(&self, p: Point2) -> Result<Point2> {
        let v = self.homogeneous(p);
        if v.z * self.valid_sign <= HORIZON_EPS {
            return Err(Error::AtInfinity { x: p.0, y: p.1 });
        }
        Ok((v.x / v.z, v.y / v.z))
    }

    pub fn inverse(&self) -> Result<Homography> {
        let inv = self
            .matrix()
            .try_inverse()
            .ok_or_else(|| Error::Degenerate("homography is singular".into()))?;
        let mut out = Self::from_matrix(inv)?;
        // a floor point seen with scale w maps back with scale 1 / (w * inv22)
        out.valid_sign = self.valid_sign * inv[(2, 2)].signum();
        Ok(out)
    }

    /// Relative Frobenius distance to `other` after normalization.
    pub fn relative_error(&self, other: &Homography) -> f64 {
        (self.matrix() - other.matrix()).norm() / other.matrix().norm()
    }
}

/// Similarity that moves the centroid to the origin and scales the mean
/// distance to sqrt(2).
fn normalizer(points: &[Point2]) -> Matrix3<f64> {
    let n = points.len() as f64;
    let (mx, my) = points.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let (mx, my) = (mx / n, my / n);
    let mean_d = points.iter().map(|p| (p.0 - mx).hypot(p.1 - my)).sum::<f64>() / n;
    let s = if mean_d > 0.0 { std::f64::consts::SQRT_2 / mean_d } else { 1.0 };
    Matrix3::new(s, 0.0, -s * mx, 0.0, s, -s * my, 0.0, 0.0, 1.0)
}

fn transform(t: &Matrix3<f64>, p: Point2) -> Point2 {
    let v = t * Vector3::new(p.0, p.1, 1.0);
    (v.x / v.z, v.y / v.z)
}

/// True if the points are (numerically) on one line.
fn collinear(points: &[Point2]) -> bool {
    let t = normalizer(points);
    let q: Vec<Point2> = points.iter().map(|&p| transform(&t, p)).collect();
    let n = q.len() as f64;
    let (sxx, sxy, syy) = q
        .iter()
        .fold((0.0, 0.0, 0.0), |a, p| (a.0 + p.0 * p.0, a.1 + p.0 * p.1, a.2 + p.1 * p.1));
    let cov = nalgebra::Matrix2::new(sxx / n, sxy / n, sxy / n, syy / n);
    let eig = SymmetricEigen::new(cov).eigenvalues;
    eig.min() < 1e-10 * eig.max()
}

/// Least-squares homography mapping each `src[i]` to `dst[i]`.
pub fn estimate_homography(src: &[Point2], dst: &[Point2]) -> Result<Homography> {
    if src.len() != dst.len() {
        return Err(Error::param("correspondences", "source and target counts differ"));
    }
    if src.len() < 4 {
        return Err(Error::param(
            "correspondences",
            format!("need at least 4 points, got {}", src.len()),
        ));
    }
    if collinear(src) || collinear(dst) {
        return Err(Error::Degenerate("correspondences are collinear".into()));
    }
    let ts = normalizer(src);
    let td = normalizer(dst);
    let rows = (2 * src.len()).max(9);
    let mut a = DMatrix::<f64>::zeros(rows, 9);
    for (i, (&s, &d)) in src.iter().zip(dst).enumerate() {
        let (x, y) = transform(&ts, s);
        let (u, v) = transform(&td, d);
        let r = 2 * i;
        a.row_mut(r).copy_from_slice(&[-x, -y, -1.0, 0.0, 0.0, 0.0, u * x, u * y, u]);
        a.row_mut(r + 1).copy_from_slice(&[0.0, 0.0, 0.0, -x, -y, -1.0, v * x, v * y, v]);
    }
    let svd = a.svd(false, true);
    let v_t = svd.v_t.ok_or_else(|| Error::Degenerate("SVD failed".into()))?;
    let sv = &svd.singular_values;
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&i, &j| sv[i].total_cmp(&sv[j]));
    // a second near-zero singular value means the solution is not unique
    if sv[order[1]] < 1e-9 * sv[order[sv.len() - 1]] {
        return Err(Error::Degenerate("correspondences do not determine a homography".into()));
    }
    let hvec = v_t.row(order[0]);
    let hn = Matrix3::from_fn(|r, c| hvec[3 * r + c]);
    let td_inv = td.try_inverse().expect("similarity is invertible");
    let m = td_inv * hn * ts;
    let mut h = Homography::from_matrix(m)?;
    let w0 = h.homogeneous(src[0]).z;
    h.valid_sign = w0.signum();
    Ok(h)
}

/// Root-mean-square distance between `h(src[i])` and `dst[i]`.
pub fn transfer_rms(h: &Homography, src: &[Point2], dst: &[Point2]) -> Result<f64> {
    let mut acc = 0.0;
    for (&s, &d) in src.iter().zip(dst) {
        let p = h.apply(s)?;
        acc += (p.0 - d.0).powi(2) + (p.1 - d.1).powi(2);
    }
    Ok((acc / src.len().max(1) as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn project(m: &Matrix3<f64>, p: Point2) -> Point2 {
        transform(m, p)
    }

    fn grid() -> Vec<Point2> {
        let mut v = Vec::new();
        for i in 0..4 {
            for j in 0..3 {
                v.push((i as f64 * 1.5 - 2.0, j as f64 * 2.0 + 1.0));
            }
        }
        v
    }

    #[test]
    fn identity_and_translation() {
        let pts = grid();
        let h = estimate_homography(&pts, &pts).unwrap();
        assert!(h.relative_error(&Homography::identity()) < 1e-12);
        let moved: Vec<Point2> = pts.iter().map(|p| (p.0 + 1.0, p.1 + 2.0)).collect();
        let h = estimate_homography(&pts, &moved).unwrap();
        let want = Matrix3::new(1.0, 0.0, 1.0, 0.0, 1.0, 2.0, 0.0, 0.0, 1.0);
        assert!((h.matrix() - want).norm() < 1e-12);
    }

    #[test]
    fn projective_roundtrip() {
        let truth = Matrix3::new(0.9, 0.2, 3.0, -0.1, 1.1, -2.0, 0.01, 0.03, 1.0);
        let src = grid();
        let dst: Vec<Point2> = src.iter().map(|&p| project(&truth, p)).collect();
        let h = estimate_homography(&src, &dst).unwrap();
        let t = Homography::from_matrix(truth).unwrap();
        assert!(h.relative_error(&t) < 1e-10);
        let inv = h.inverse().unwrap();
        for (&s, &d) in src.iter().zip(&dst) {
            let back = inv.apply(d).unwrap();
            assert_relative_eq!(back.0, s.0, epsilon = 1e-9);
            assert_relative_eq!(back.1, s.1, epsilon = 1e-9);
        }
    }

    #[test]
    fn rejects_too_few_or_collinear() {
        let p = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)];
        assert!(estimate_homography(&p, &p).is_err());
        let line: Vec<Point2> = (0..6).map(|i| (i as f64, 2.0 * i as f64)).collect();
        assert!(matches!(estimate_homography(&line, &line), Err(Error::Degenerate(_))));
    }

    #[test]
    fn beyond_horizon_is_an_error() {
        // image y < 100 lies above the horizon
        let m = Matrix3::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.01, -1.0);
        let src: Vec<Point2> = [(0.0, 150.0), (50.0, 150.0), (0.0, 300.0), (50.0, 300.0), (20.0, 200.0)].to_vec();
        let dst: Vec<Point2> = src.iter().map(|&p| project(&m, p)).collect();
        let h = estimate_homography(&src, &dst).unwrap();
        assert!(h.apply((10.0, 250.0)).is_ok());
        assert!(matches!(h.apply((10.0, 100.0)), Err(Error::AtInfinity { .. })));
        assert!(matches!(h.apply((10.0, 40.0)), Err(Error::AtInfinity { .. })));
    }
}
