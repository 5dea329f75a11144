//! Flat-shaded perspective renders of a floor scene with known ground truth.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::bin_view::{add_noise, draw_bin, BinSprite};
use crate::bins::BinState;
use crate::coverage::{CameraPose, Vec3};
use crate::detection::DetectionBox;
use crate::error::{Error, Result};
use crate::imaging::{BinaryMask, Ellipse, ImageBuffer, Rect, RleMask};
use crate::mapping::{marker_cell_value, MarkerPlacement, MarkerWorld, MARKER_CELLS};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checker {
    pub cell: f64,
    pub color: [u8; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FloorSpec {
    /// Extent along x and z in metres, starting at the origin.
    pub size: [f64; 2],
    pub color: [u8; 3],
    #[serde(default)]
    pub checker: Option<Checker>,
    /// Per-channel uniform noise amplitude.
    #[serde(default)]
    pub noise: u8,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneCamera {
    pub position: Vec3,
    pub yaw: f64,
    pub pitch: f64,
    pub hfov: f64,
    pub width: usize,
    pub height: usize,
}

impl SceneCamera {
    pub fn focal(&self) -> f64 {
        self.width as f64 / 2.0 / (self.hfov / 2.0).tan()
    }

    /// Pose with the vertical field of view implied by square pixels.
    pub fn pose(&self) -> CameraPose {
        let vfov = 2.0 * (self.height as f64 / 2.0 / self.focal()).atan();
        CameraPose {
            name: String::new(),
            position: self.position,
            yaw: self.yaw,
            pitch: self.pitch,
            hfov: self.hfov,
            vfov,
            max_range: f64::INFINITY,
        }
    }

    fn principal(&self) -> (f64, f64) {
        ((self.width as f64 - 1.0) / 2.0, (self.height as f64 - 1.0) / 2.0)
    }

    /// Pixel-center coordinates of a world point and its depth, if in front.
    pub fn project(&self, p: Vec3) -> Option<(f64, f64, f64)> {
        let [x, y, z] = self.pose().to_camera(p);
        if z <= 1e-9 {
            return None;
        }
        let f = self.focal();
        let (cx, cy) = self.principal();
        Some((cx + f * x / z, cy - f * y / z, z))
    }

    /// Floor point `(x, z)` seen through pixel-center coordinates `(u, v)`.
    pub fn floor_point(&self, u: f64, v: f64) -> Option<(f64, f64)> {
        let f = self.focal();
        let (cx, cy) = self.principal();
        let [r, up, fw] = self.pose().basis();
        let (a, b) = ((u - cx) / f, -(v - cy) / f);
        let d = [0, 1, 2].map(|i| r[i] * a + up[i] * b + fw[i]);
        if d[1] >= -1e-12 {
            return None;
        }
        let t = -self.position[1] / d[1];
        Some((self.position[0] + t * d[0], self.position[2] + t * d[2]))
    }
}

fn default_velocity() -> [f64; 2] {
    [0.0, 0.0]
}

fn default_person_height() -> f64 {
    1.75
}

fn default_person_width() -> f64 {
    0.5
}

fn default_puddle_color() -> [u8; 3] {
    [196, 198, 204]
}

/// Scene content. Positions are floor coordinates `[x, z]` in metres and
/// velocities are metres per frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SceneItem {
    LitterBlob {
        position: [f64; 2],
        /// Side of the square footprint.
        size: f64,
        color: [u8; 3],
        #[serde(default)]
        class: u32,
        #[serde(default = "default_velocity")]
        velocity: [f64; 2],
    },
    Puddle {
        position: [f64; 2],
        radii: [f64; 2],
        #[serde(default)]
        rotation: f64,
        #[serde(default = "default_puddle_color")]
        color: [u8; 3],
    },
    Bin {
        position: [f64; 2],
        radius: f64,
        height: f64,
        #[serde(default)]
        full: bool,
        #[serde(default)]
        arc_occlusion: f64,
    },
    PersonSilhouette {
        position: [f64; 2],
        #[serde(default = "default_person_height")]
        height: f64,
        #[serde(default = "default_person_width")]
        width: f64,
        color: [u8; 3],
        #[serde(default = "default_velocity")]
        velocity: [f64; 2],
    },
    MarkerCube {
        position: [f64; 2],
        /// Side of the marker's black border.
        size: f64,
        id: usize,
        #[serde(default)]
        yaw: f64,
    },
}

impl SceneItem {
    pub fn position_at(&self, frame: usize) -> [f64; 2] {
        let t = frame as f64;
        match self {
            SceneItem::LitterBlob { position, velocity, .. }
            | SceneItem::PersonSilhouette { position, velocity, .. } => {
                [position[0] + velocity[0] * t, position[1] + velocity[1] * t]
            }
            SceneItem::Puddle { position, .. }
            | SceneItem::Bin { position, .. }
            | SceneItem::MarkerCube { position, .. } => *position,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub floor: FloorSpec,
    pub camera: SceneCamera,
    #[serde(default)]
    pub items: Vec<SceneItem>,
    /// Colour of everything that is not floor.
    #[serde(default = "default_background")]
    pub background: [u8; 3],
}

fn default_background() -> [u8; 3] {
    [96, 96, 104]
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        let [w, d] = self.floor.size;
        if !(w > 0.0 && d > 0.0) {
            return Err(Error::Degenerate("floor has no area".into()));
        }
        let c = &self.camera;
        if c.width == 0 || c.height == 0 {
            return Err(Error::param("camera", "resolution must be non-zero"));
        }
        if !(c.hfov > 0.0 && c.hfov < std::f64::consts::PI) {
            return Err(Error::param("camera.hfov", "must lie in (0, pi)"));
        }
        if c.position[1] <= 0.0 {
            return Err(Error::param("camera.position", "camera must be above the floor"));
        }
        for (i, item) in self.items.iter().enumerate() {
            let [x, z] = item.position_at(0);
            if !(0.0..=w).contains(&x) || !(0.0..=d).contains(&z) {
                return Err(Error::Malformed {
                    what: format!("scene item {i}"),
                    reason: format!("position ({x}, {z}) outside the floor"),
                });
            }
            if let SceneItem::MarkerCube { id, .. } = item {
                if *id >= crate::mapping::DICTIONARY.len() {
                    return Err(Error::Malformed {
                        what: format!("scene item {i}"),
                        reason: format!("marker id {id} not in the dictionary"),
                    });
                }
            }
        }
        Ok(())
    }

    /// Floor placements of all markers, for calibration.
    pub fn marker_world(&self) -> MarkerWorld {
        self.items
            .iter()
            .filter_map(|item| match item {
                SceneItem::MarkerCube { position, size, id, yaw } => Some((
                    *id,
                    MarkerPlacement {
                        x: position[0],
                        y: position[1],
                        size: Some(*size),
                        yaw: *yaw,
                    },
                )),
                _ => None,
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PersonTruth {
    pub item: usize,
    /// Floor position as `(x, z)`.
    pub floor_xy: (f64, f64),
    pub bbox: DetectionBox,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinTruth {
    pub bin_id: String,
    pub state: BinState,
    pub roi: Rect,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameTruth {
    pub index: usize,
    pub file: String,
    /// Visible litter, confidence 1.
    pub boxes: Vec<DetectionBox>,
    pub people: Vec<PersonTruth>,
    pub bins: Vec<BinTruth>,
    pub stain_mask: RleMask,
    /// Items with no visible pixel.
    pub offscreen: Vec<usize>,
}

pub struct RenderedFrame {
    pub image: ImageBuffer,
    pub truth: FrameTruth,
}

/// What painted each pixel: 0 for floor or background, item index + 1 otherwise.
struct ItemMap {
    width: usize,
    ids: Vec<u32>,
}

impl ItemMap {
    fn bbox(&self, item: usize) -> Option<(usize, usize, usize, usize, usize)> {
        let want = item as u32 + 1;
        let mut out: Option<(usize, usize, usize, usize, usize)> = None;
        for (i, &id) in self.ids.iter().enumerate() {
            if id == want {
                let (x, y) = (i % self.width, i / self.width);
                out = Some(match out {
                    None => (x, y, x, y, 1),
                    Some((x0, y0, x1, y1, n)) => (x0.min(x), y0.min(y), x1.max(x), y1.max(y), n + 1),
                });
            }
        }
        out
    }
}

fn floor_color(spec: &SceneSpec, x: f64, z: f64) -> Option<[u8; 3]> {
    let [w, d] = spec.floor.size;
    if !(0.0..=w).contains(&x) || !(0.0..=d).contains(&z) {
        return None;
    }
    Some(match &spec.floor.checker {
        Some(ch) if ((x / ch.cell).floor() as i64 + (z / ch.cell).floor() as i64).rem_euclid(2) == 1 => ch.color,
        _ => spec.floor.color,
    })
}

/// Colour of a floor-lying item at floor point `(x, z)`, if it covers it.
fn floor_item_color(item: &SceneItem, at: [f64; 2], x: f64, z: f64) -> Option<[u8; 3]> {
    let (dx, dz) = (x - at[0], z - at[1]);
    match item {
        SceneItem::LitterBlob { size, color, .. } => {
            (dx.abs() <= size / 2.0 && dz.abs() <= size / 2.0).then_some(*color)
        }
        SceneItem::Puddle { radii, rotation, color, .. } => {
            let (s, c) = rotation.sin_cos();
            let (u, v) = (dx * c + dz * s, -dx * s + dz * c);
            ((u / radii[0]).powi(2) + (v / radii[1]).powi(2) <= 1.0).then_some(*color)
        }
        SceneItem::MarkerCube { size, id, yaw, .. } => {
            let place = MarkerPlacement { x: at[0], y: at[1], size: Some(*size), yaw: *yaw };
            let (u, v) = place.to_marker(x, z);
            let cells = MARKER_CELLS as f64;
            let g = marker_cell_value(*id, (u / size + 0.5) * cells, (v / size + 0.5) * cells)?;
            Some([g, g, g])
        }
        _ => None,
    }
}

/// Render one frame. `seed` drives noise and bin contents.
pub fn render_frame(spec: &SceneSpec, frame: usize, seed: u64) -> Result<RenderedFrame> {
    spec.validate()?;
    let cam = &spec.camera;
    let (w, h) = (cam.width, cam.height);
    let mut img = ImageBuffer::rgb(w, h, spec.background)?;
    let mut ids = ItemMap { width: w, ids: vec![0; w * h] };
    let positions: Vec<[f64; 2]> = spec.items.iter().map(|i| i.position_at(frame)).collect();
    // puddles lie under litter and markers
    let mut order: Vec<usize> = (0..spec.items.len())
        .filter(|&i| {
            matches!(
                spec.items[i],
                SceneItem::Puddle { .. } | SceneItem::LitterBlob { .. } | SceneItem::MarkerCube { .. }
            )
        })
        .collect();
    order.sort_by_key(|&i| !matches!(spec.items[i], SceneItem::Puddle { .. }));

    for y in 0..h {
        for x in 0..w {
            let Some((fx, fz)) = cam.floor_point(x as f64, y as f64) else { continue };
            let Some(mut color) = floor_color(spec, fx, fz) else { continue };
            let mut owner = 0u32;
            for &i in &order {
                if let Some(c) = floor_item_color(&spec.items[i], positions[i], fx, fz) {
                    color = c;
                    owner = i as u32 + 1;
                }
            }
            img.put_rgb(x, y, color);
            ids.ids[y * w + x] = owner;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ frame as u64);
    let mut bins = Vec::new();
    let mut sprites: Vec<(f64, usize)> = Vec::new();
    for (i, item) in spec.items.iter().enumerate() {
        if matches!(item, SceneItem::Bin { .. } | SceneItem::PersonSilhouette { .. }) {
            let [x, z] = positions[i];
            if let Some((_, _, depth)) = cam.project([x, 0.0, z]) {
                sprites.push((depth, i));
            }
        }
    }
    sprites.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(depth, i) in &sprites {
        let [x, z] = positions[i];
        let f = cam.focal();
        match &spec.items[i] {
            SceneItem::Bin { radius, height, full, arc_occlusion, .. } => {
                let Some((u, v, _)) = cam.project([x, *height, z]) else { continue };
                let Some((_, vb, _)) = cam.project([x, 0.0, z]) else { continue };
                let a = radius * f / depth;
                let elevation = (cam.position[1] - height).atan2(depth);
                let b = a * elevation.sin().abs().max(0.05);
                let sprite = BinSprite {
                    rim: Ellipse::new(u, v, a, b, 0.0),
                    rim_thickness: (0.06 * a).max(3.0),
                    body_depth: (vb - v).max(0.0),
                    full: *full,
                    arc_occlusion: *arc_occlusion,
                };
                let before = img.clone();
                draw_bin(&mut img, &sprite, &mut rng);
                mark_changed(&before, &img, &mut ids, i);
                let roi = sprite.roi(w, h);
                bins.push(BinTruth {
                    bin_id: format!("bin{i}"),
                    state: if *full { BinState::Full } else { BinState::Empty },
                    roi,
                });
            }
            SceneItem::PersonSilhouette { height, width, color, .. } => {
                let Some((u, vb, _)) = cam.project([x, 0.0, z]) else { continue };
                let Some((_, vt, _)) = cam.project([x, *height, z]) else { continue };
                let pw = width * f / depth;
                let head = 0.13 * (vb - vt);
                // pixel centers sit half a pixel off the box edges
                let (left, right) = (u - pw / 2.0 - 0.5, u + pw / 2.0 - 0.5);
                let head_c = (u - 0.5, vt + head - 0.5);
                let y0 = (vt - 0.5).ceil().max(0.0) as usize;
                let y1 = ((vb - 0.5).ceil().max(0.0) as usize).min(h);
                let x0 = left.ceil().max(0.0) as usize;
                let x1 = (right.ceil().max(0.0) as usize).min(w);
                for py in y0..y1 {
                    for px in x0..x1 {
                        let (fx, fy) = (px as f64, py as f64);
                        let body = fy >= head_c.1 + head * 0.8
                            && (fx - head_c.0).abs() <= pw / 2.0 * if fy < head_c.1 + 2.0 * head { 0.85 } else { 1.0 };
                        let in_head = (fx - head_c.0).powi(2) + (fy - head_c.1).powi(2) <= (head * 1.0).powi(2);
                        if body || in_head {
                            img.put_rgb(px, py, *color);
                            ids.ids[py * w + px] = i as u32 + 1;
                        }
                    }
                }
            }
            _ => {}
        }
    }

    add_noise(&mut img, spec.floor.noise, &mut rng);

    let mut boxes = Vec::new();
    let mut people = Vec::new();
    let mut offscreen = Vec::new();
    let mut stain = vec![false; w * h];
    let mut puddle_ids = std::collections::BTreeSet::new();
    for (i, item) in spec.items.iter().enumerate() {
        if matches!(item, SceneItem::Puddle { .. }) {
            puddle_ids.insert(i as u32 + 1);
        }
    }
    for (k, &id) in ids.ids.iter().enumerate() {
        stain[k] = puddle_ids.contains(&id);
    }
    for (i, item) in spec.items.iter().enumerate() {
        let Some((x0, y0, x1, y1, _)) = ids.bbox(i) else {
            log::warn!("scene item {i} is not visible in frame {frame}");
            offscreen.push(i);
            continue;
        };
        let bbox = |class| DetectionBox::new(x0 as f64, y0 as f64, (x1 - x0 + 1) as f64, (y1 - y0 + 1) as f64, class, 1.0);
        match item {
            SceneItem::LitterBlob { class, .. } => boxes.push(bbox(*class)),
            SceneItem::PersonSilhouette { .. } => {
                let p = positions[i];
                people.push(PersonTruth {
                    item: i,
                    floor_xy: (p[0], p[1]),
                    bbox: bbox(0),
                });
            }
            _ => {}
        }
    }
    let stain_mask = BinaryMask::from_bits(w, h, stain)?;
    Ok(RenderedFrame {
        image: img,
        truth: FrameTruth {
            index: frame,
            file: frame_file_name(frame),
            boxes,
            people,
            bins,
            stain_mask: RleMask::encode(&stain_mask),
            offscreen,
        },
    })
}

fn mark_changed(before: &ImageBuffer, after: &ImageBuffer, ids: &mut ItemMap, item: usize) {
    for (k, (a, b)) in before.data().chunks_exact(3).zip(after.data().chunks_exact(3)).enumerate() {
        if a != b {
            ids.ids[k] = item as u32 + 1;
        }
    }
}

pub fn frame_file_name(frame: usize) -> String {
    format!("frame_{frame:05}.png")
}

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthManifest {
    pub format_version: u32,
    pub seed: u64,
    pub width: usize,
    pub height: usize,
    pub frames: Vec<FrameTruth>,
    /// Floor placements of the markers in the scene.
    pub markers: MarkerWorld,
    /// Bin regions keyed by bin id.
    pub rois: BTreeMap<String, Rect>,
}

/// Render `frames` frames; returns the images and their manifest.
pub fn synthesize(spec: &SceneSpec, frames: usize, seed: u64) -> Result<(Vec<ImageBuffer>, GroundTruthManifest)> {
    if frames == 0 {
        return Err(Error::param("frames", "must be >= 1"));
    }
    let mut images = Vec::with_capacity(frames);
    let mut truths = Vec::with_capacity(frames);
    for f in 0..frames {
        let r = render_frame(spec, f, seed)?;
        images.push(r.image);
        truths.push(r.truth);
    }
    let rois = truths[0].bins.iter().map(|b| (b.bin_id.clone(), b.roi)).collect();
    Ok((
        images,
        GroundTruthManifest {
            format_version: MANIFEST_VERSION,
            seed,
            width: spec.camera.width,
            height: spec.camera.height,
            frames: truths,
            markers: spec.marker_world(),
            rois,
        },
    ))
}

/// Render to `out_dir`: one PNG per frame plus `manifest.json`.
pub fn synthesize_to_dir(
    spec: &SceneSpec,
    frames: usize,
    seed: u64,
    out_dir: &std::path::Path,
) -> Result<GroundTruthManifest> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let (images, manifest) = synthesize(spec, frames, seed)?;
    for (img, t) in images.iter().zip(&manifest.frames) {
        crate::imaging::io::write_image(img, out_dir.join(&t.file))?;
    }
    let path = out_dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest)?;
    std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}
