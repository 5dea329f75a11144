//! Camera coverage of a box-world scene: probe grid, occluded visibility,
//! blind spots and greedy camera selection.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = [f64; 3];

/// Axis-aligned box in metres; y is up.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn new(min: Vec3, max: Vec3) -> Self {
        Self { min, max }
    }

    /// Closed containment.
    pub fn contains(&self, p: Vec3) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    pub fn contains_box(&self, other: &Aabb) -> bool {
        self.contains(other.min) && self.contains(other.max)
    }

    fn is_proper(&self) -> bool {
        (0..3).all(|i| self.min[i].is_finite() && self.max[i].is_finite() && self.min[i] <= self.max[i])
    }

    /// True iff the segment `a -> b` runs through the open interior of the
    /// box for a positive length (slab method).
    pub fn blocks_segment(&self, a: Vec3, b: Vec3) -> bool {
        let (mut t0, mut t1) = (0.0f64, 1.0f64);
        for i in 0..3 {
            let d = b[i] - a[i];
            if d == 0.0 {
                if a[i] <= self.min[i] || a[i] >= self.max[i] {
                    return false;
                }
                continue;
            }
            let ta = (self.min[i] - a[i]) / d;
            let tb = (self.max[i] - a[i]) / d;
            t0 = t0.max(ta.min(tb));
            t1 = t1.min(ta.max(tb));
        }
        let len = (0..3).map(|i| (b[i] - a[i]).powi(2)).sum::<f64>().sqrt();
        (t1 - t0) * len > 1e-9
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub bounds: Aabb,
    #[serde(default)]
    pub occluders: Vec<Aabb>,
    #[serde(default)]
    pub floor: f64,
}

impl Scene {
    pub fn validate(&self) -> Result<()> {
        let b = &self.bounds;
        if !b.is_proper() || b.max[0] <= b.min[0] || b.max[2] <= b.min[2] {
            return Err(Error::Degenerate(format!("scene bounds {b:?} have no floor area")));
        }
        for (i, o) in self.occluders.iter().enumerate() {
            if !o.is_proper() {
                return Err(Error::Malformed {
                    what: format!("occluder {i}"),
                    reason: "min must not exceed max".into(),
                });
            }
            if !b.contains_box(o) {
                return Err(Error::Malformed {
                    what: format!("occluder {i}"),
                    reason: "not inside scene bounds".into(),
                });
            }
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let scene: Scene = load_json(path.as_ref(), "scene")?;
        scene.validate()?;
        Ok(scene)
    }
}

pub(crate) fn load_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Malformed {
        what: format!("{what} {}", path.display()),
        reason: e.to_string(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub id: usize,
    pub position: Vec3,
    /// Importance in placement planning, e.g. passenger flow.
    #[serde(default = "unit_weight")]
    pub weight: f64,
}

fn unit_weight() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeGrid {
    pub spacing: f64,
    pub probes: Vec<Probe>,
}

impl ProbeGrid {
    pub fn len(&self) -> usize {
        self.probes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probes.is_empty()
    }

    fn total_weight(&self) -> f64 {
        self.probes.iter().map(|p| p.weight).sum()
    }
}

/// Lattice origins along one floor axis: `min, min + s, ...` up to `max`.
fn lattice(min: f64, max: f64, spacing: f64) -> Vec<f64> {
    let n = ((max - min) / spacing + 1e-9).floor() as usize + 1;
    (0..n).map(|i| min + i as f64 * spacing).collect()
}

/// Floor probes at `probe_height` above the floor, x varying fastest.
/// Probes inside or on the surface of an occluder are dropped; ids are
/// consecutive in the remaining order.
pub fn generate_probes(scene: &Scene, spacing: f64, probe_height: f64) -> Result<ProbeGrid> {
    scene.validate()?;
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(Error::param("spacing", format!("must be positive, got {spacing}")));
    }
    let b = &scene.bounds;
    let y = scene.floor + probe_height;
    let xs = lattice(b.min[0], b.max[0], spacing);
    let zs = lattice(b.min[2], b.max[2], spacing);
    let mut probes = Vec::with_capacity(xs.len() * zs.len());
    for &z in &zs {
        for &x in &xs {
            let p = [x, y, z];
            if scene.occluders.iter().any(|o| o.contains(p)) {
                continue;
            }
            probes.push(Probe {
                id: probes.len(),
                position: p,
                weight: 1.0,
            });
        }
    }
    Ok(ProbeGrid { spacing, probes })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraPose {
    #[serde(default)]
    pub name: String,
    pub position: Vec3,
    /// Rotation about +y; zero looks along +z.
    pub yaw: f64,
    /// Elevation of the optical axis; negative looks down.
    pub pitch: f64,
    pub hfov: f64,
    pub vfov: f64,
    #[serde(default = "default_range")]
    pub max_range: f64,
}

fn default_range() -> f64 {
    50.0
}

impl CameraPose {
    pub fn validate(&self) -> Result<()> {
        use std::f64::consts::PI;
        if !(self.hfov > 0.0 && self.hfov < PI && self.vfov > 0.0 && self.vfov < PI) {
            return Err(Error::param("fov", format!("need 0 < fov < pi, got {} / {}", self.hfov, self.vfov)));
        }
        if !(self.max_range > 0.0) {
            return Err(Error::param("max_range", "must be positive"));
        }
        Ok(())
    }

    /// Right, up and forward unit vectors.
    pub fn basis(&self) -> [Vec3; 3] {
        let (sy, cy) = self.yaw.sin_cos();
        let (sp, cp) = self.pitch.sin_cos();
        let forward = [sy * cp, sp, cy * cp];
        let right = [cy, 0.0, -sy];
        let up = cross(forward, right);
        [right, up, forward]
    }

    /// Point in camera coordinates (x right, y up, z forward).
    pub fn to_camera(&self, p: Vec3) -> Vec3 {
        let d = sub(p, self.position);
        let [r, u, f] = self.basis();
        [dot(d, r), dot(d, u), dot(d, f)]
    }
}

pub(crate) fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Frustum, range and occlusion test for one probe.
pub fn visible(camera: &CameraPose, probe: Vec3, scene: &Scene) -> bool {
    let [x, y, z] = camera.to_camera(probe);
    if z <= 0.0 {
        return false;
    }
    if x.abs() > z * (camera.hfov / 2.0).tan() || y.abs() > z * (camera.vfov / 2.0).tan() {
        return false;
    }
    if (x * x + y * y + z * z).sqrt() > camera.max_range {
        return false;
    }
    !scene
        .occluders
        .iter()
        .any(|o| o.blocks_segment(camera.position, probe))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    /// Visible probe ids per camera name.
    pub per_camera: BTreeMap<String, Vec<usize>>,
    pub covered: Vec<usize>,
    pub blind: Vec<usize>,
    pub coverage_ratio: f64,
}

fn camera_key(camera: &CameraPose, index: usize) -> String {
    if camera.name.is_empty() {
        format!("cam{index}")
    } else {
        camera.name.clone()
    }
}

fn visible_ids(camera: &CameraPose, grid: &ProbeGrid, scene: &Scene) -> Vec<usize> {
    grid.probes
        .par_iter()
        .filter(|p| visible(camera, p.position, scene))
        .map(|p| p.id)
        .collect()
}

pub fn coverage(cameras: &[CameraPose], grid: &ProbeGrid, scene: &Scene) -> Result<CoverageReport> {
    for c in cameras {
        c.validate()?;
    }
    let mut seen = vec![false; grid.len()];
    let mut per_camera = BTreeMap::new();
    for (i, cam) in cameras.iter().enumerate() {
        let ids = visible_ids(cam, grid, scene);
        for &id in &ids {
            seen[id] = true;
        }
        if per_camera.insert(camera_key(cam, i), ids).is_some() {
            return Err(Error::param("cameras", format!("duplicate camera name {}", camera_key(cam, i))));
        }
    }
    let (covered, blind): (Vec<usize>, Vec<usize>) = (0..grid.len()).partition(|&i| seen[i]);
    let coverage_ratio = if grid.is_empty() {
        0.0
    } else {
        covered.len() as f64 / grid.len() as f64
    };
    Ok(CoverageReport {
        per_camera,
        covered,
        blind,
        coverage_ratio,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    /// Indices into the candidate list, in pick order.
    pub selected: Vec<usize>,
    pub cameras: Vec<CameraPose>,
    /// Covered share of total probe weight.
    pub ratio: f64,
    /// The target ratio was not reached.
    pub shortfall: bool,
}

/// Greedy weighted set cover over candidate poses.
pub fn suggest_placement(
    scene: &Scene,
    grid: &ProbeGrid,
    candidates: &[CameraPose],
    target_ratio: f64,
) -> Result<Placement> {
    if !(target_ratio > 0.0 && target_ratio <= 1.0) {
        return Err(Error::param("target_ratio", format!("must lie in (0, 1], got {target_ratio}")));
    }
    for c in candidates {
        c.validate()?;
    }
    let sets: Vec<Vec<usize>> = candidates.iter().map(|c| visible_ids(c, grid, scene)).collect();
    let (selected, ratio) = greedy_cover(&sets, &grid.probes.iter().map(|p| p.weight).collect::<Vec<_>>(), target_ratio);
    let total = grid.total_weight();
    let shortfall = total <= 0.0 || ratio + 1e-12 < target_ratio;
    Ok(Placement {
        cameras: selected.iter().map(|&i| candidates[i].clone()).collect(),
        selected,
        ratio,
        shortfall,
    })
}

/// Picks sets by largest uncovered weight (first index on ties) until the
/// covered share reaches `target` or no set adds weight.
pub fn greedy_cover(sets: &[Vec<usize>], weights: &[f64], target: f64) -> (Vec<usize>, f64) {
    let total: f64 = weights.iter().sum();
    let mut covered = vec![false; weights.len()];
    let mut got = 0.0;
    let mut picked = Vec::new();
    let mut used = vec![false; sets.len()];
    while total > 0.0 && got / total + 1e-12 < target {
        let gains: Vec<f64> = sets
            .par_iter()
            .map(|s| s.iter().filter(|&&i| !covered[i]).map(|&i| weights[i]).sum())
            .collect();
        let mut best: Option<usize> = None;
        for (i, &g) in gains.iter().enumerate() {
            if !used[i] && g > 0.0 && best.is_none_or(|b| g > gains[b]) {
                best = Some(i);
            }
        }
        let Some(b) = best else { break };
        used[b] = true;
        picked.push(b);
        for &i in &sets[b] {
            if !covered[i] {
                covered[i] = true;
                got += weights[i];
            }
        }
    }
    (picked, if total > 0.0 { got / total } else { 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn room(size: f64) -> Scene {
        Scene {
            bounds: Aabb::new([0.0, 0.0, 0.0], [size, 3.0, size]),
            occluders: vec![],
            floor: 0.0,
        }
    }

    fn cam(position: Vec3, yaw: f64, pitch: f64, fov: f64) -> CameraPose {
        CameraPose {
            name: String::new(),
            position,
            yaw,
            pitch,
            hfov: fov,
            vfov: fov,
            max_range: 50.0,
        }
    }

    #[test]
    fn lattice_counts() {
        assert_eq!(generate_probes(&room(10.0), 1.0, 0.1).unwrap().len(), 121);
        let g = generate_probes(&room(10.0), 25.0, 0.1).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g.probes[0].position, [0.0, 0.1, 0.0]);
        let mut half = room(10.0);
        half.occluders.push(Aabb::new([0.0, 0.0, 0.0], [4.5, 2.0, 10.0]));
        // columns x = 0..=4 removed
        assert_eq!(generate_probes(&half, 1.0, 0.1).unwrap().len(), 66);
    }

    #[test]
    fn probe_ids_and_raster_order() {
        let g = generate_probes(&room(2.0), 1.0, 0.1).unwrap();
        let xz: Vec<(f64, f64)> = g.probes.iter().map(|p| (p.position[0], p.position[2])).collect();
        assert_eq!(xz[..4], [(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (0.0, 1.0)]);
        assert!(g.probes.iter().enumerate().all(|(i, p)| p.id == i));
    }

    #[test]
    fn degenerate_inputs() {
        assert!(generate_probes(&room(0.0), 1.0, 0.1).is_err());
        assert!(generate_probes(&room(5.0), 0.0, 0.1).is_err());
        let mut s = room(5.0);
        s.occluders.push(Aabb::new([4.0, 0.0, 4.0], [6.0, 1.0, 5.0]));
        assert!(s.validate().is_err());
    }

    #[test]
    fn axis_behind_and_wall() {
        let s = room(20.0);
        let c = cam([10.0, 1.0, 5.0], 0.0, 0.0, 1.0);
        assert!(visible(&c, [10.0, 1.0, 10.0], &s));
        assert!(!visible(&c, [10.0, 1.0, 2.0], &s));
        let mut walled = s.clone();
        walled.occluders.push(Aabb::new([8.0, 0.0, 7.0], [12.0, 3.0, 7.5]));
        assert!(!visible(&c, [10.0, 1.0, 10.0], &walled));
        let far = cam([10.0, 1.0, 0.0], 0.0, 0.0, 1.0);
        let mut short = far.clone();
        short.max_range = 5.0;
        assert!(visible(&far, [10.0, 1.0, 19.0], &s));
        assert!(!visible(&short, [10.0, 1.0, 19.0], &s));
    }

    #[test]
    fn grazing_a_face_does_not_block() {
        let b = Aabb::new([1.0, 0.0, 1.0], [2.0, 1.0, 2.0]);
        // along the top face and through a vertical edge pair
        assert!(!b.blocks_segment([0.0, 1.0, 1.5], [3.0, 1.0, 1.5]));
        assert!(b.blocks_segment([0.0, 0.5, 0.0], [3.0, 0.5, 3.0]));
        assert!(!b.blocks_segment([0.0, 0.5, 2.0], [2.0, 0.5, 0.0]));
    }

    #[test]
    fn coverage_extremes() {
        let s = room(10.0);
        let g = generate_probes(&s, 1.0, 0.1).unwrap();
        let none = coverage(&[], &g, &s).unwrap();
        assert_eq!(none.coverage_ratio, 0.0);
        assert_eq!(none.blind.len(), 121);
        // corner camera looking diagonally down into the room
        let c = cam([-0.5, 3.0, -0.5], std::f64::consts::FRAC_PI_4, -0.35, 0.95 * std::f64::consts::PI);
        let r = coverage(&[c], &g, &s).unwrap();
        assert_eq!(r.coverage_ratio, 1.0);
        assert!(r.blind.is_empty());
    }

    #[test]
    fn placement_examples() {
        let s = room(10.0);
        let g = generate_probes(&s, 1.0, 0.1).unwrap();
        let everything = cam([5.0, 40.0, 5.0], 0.0, -FRAC_PI_2 + 1e-6, 2.5);
        let p = suggest_placement(&s, &g, &[cam([0.0, 1.0, 0.0], 3.0, 0.0, 0.1), everything], 1.0).unwrap();
        assert_eq!(p.selected, vec![1]);
        assert!(!p.shortfall);

        let (sel, ratio) = greedy_cover(&[vec![0, 1], vec![2, 3]], &[1.0; 4], 1.0);
        assert_eq!((sel, ratio), (vec![0, 1], 1.0));
        let (sel, ratio) = greedy_cover(&[vec![0, 1]], &[1.0; 4], 1.0);
        assert_eq!((sel, ratio), (vec![0], 0.5));
        let short = suggest_placement(&s, &g, &[cam([0.0, 1.0, 0.0], 3.0, 0.0, 0.1)], 1.0).unwrap();
        assert!(short.shortfall);
    }

    #[test]
    fn weights_steer_the_first_pick() {
        let sets = vec![vec![0, 1, 2], vec![3]];
        assert_eq!(greedy_cover(&sets, &[1.0, 1.0, 1.0, 1.0], 0.5).0, vec![0]);
        assert_eq!(greedy_cover(&sets, &[1.0, 1.0, 1.0, 10.0], 0.5).0, vec![1]);
    }
}
