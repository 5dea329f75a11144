//! Ready-made scenes used by the command line and the evaluation suites.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::bin_view::add_noise;
use super::scene::{Checker, FloorSpec, SceneCamera, SceneItem, SceneSpec};
use crate::detection::{BlobClass, BlobManifest, DetectionBox};
use crate::imaging::draw::fill_rect_rgb;
use crate::imaging::ImageBuffer;

pub const LITTER_COLORS: [[u8; 3]; 3] = [[220, 30, 30], [30, 200, 40], [40, 60, 220]];
pub const PERSON_COLOR: [u8; 3] = [250, 200, 20];

/// Reference detector classes for the litter colours.
pub fn litter_classes() -> BlobManifest {
    BlobManifest::new(
        LITTER_COLORS
            .iter()
            .enumerate()
            .map(|(i, &color)| BlobClass {
                id: i as u32,
                name: format!("litter{i}"),
                color,
                tolerance: 30,
            })
            .collect(),
    )
}

/// Reference detector class for person silhouettes.
pub fn person_classes() -> BlobManifest {
    BlobManifest::new(vec![BlobClass {
        id: 0,
        name: "person".into(),
        color: PERSON_COLOR,
        tolerance: 40,
    }])
}

/// Noisy gray frame with `count` non-overlapping square litter blobs whose
/// sides are drawn from `sizes` (inclusive).
pub fn litter_frame(
    width: usize,
    height: usize,
    count: usize,
    sizes: (usize, usize),
    seed: u64,
) -> (ImageBuffer, Vec<DetectionBox>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut img = ImageBuffer::rgb(width, height, [120, 118, 112]).expect("non-empty frame");
    add_noise(&mut img, 8, &mut rng);
    let mut boxes: Vec<DetectionBox> = Vec::with_capacity(count);
    let margin = 4.0;
    while boxes.len() < count {
        let s = rng.gen_range(sizes.0..=sizes.1) as f64;
        let x = rng.gen_range(8.0..(width as f64 - s - 8.0)).floor();
        let y = rng.gen_range(8.0..(height as f64 - s - 8.0)).floor();
        let class = rng.gen_range(0..LITTER_COLORS.len());
        let b = DetectionBox::new(x, y, s, s, class as u32, 1.0);
        let clash = boxes.iter().any(|o| {
            b.x < o.x + o.w + margin && o.x < b.x + b.w + margin && b.y < o.y + o.h + margin && o.y < b.y + b.h + margin
        });
        if clash {
            continue;
        }
        fill_rect_rgb(&mut img, x as i64, y as i64, s as i64, s as i64, LITTER_COLORS[class]);
        boxes.push(b);
    }
    (img, boxes)
}

/// Saturated tiled floor seen from above with one to three desaturated
/// puddles.
pub fn puddle_scene(seed: u64) -> SceneSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=3);
    let mut items = Vec::new();
    for _ in 0..n {
        items.push(SceneItem::Puddle {
            position: [rng.gen_range(8.5..11.5), rng.gen_range(3.5..6.5)],
            radii: [rng.gen_range(0.4..1.1), rng.gen_range(0.3..0.8)],
            rotation: rng.gen_range(0.0..3.1),
            color: [rng.gen_range(175..215), rng.gen_range(180..215), rng.gen_range(190..225)],
        });
    }
    SceneSpec {
        floor: FloorSpec {
            size: [20.0, 14.0],
            color: [190, 80, 50],
            checker: Some(Checker {
                cell: 0.5,
                color: [160, 110, 40],
            }),
            noise: 3,
        },
        camera: SceneCamera {
            position: [10.0, 5.0, 1.0],
            yaw: 0.0,
            pitch: -1.0,
            hfov: 1.1,
            width: 320,
            height: 240,
        },
        items,
        background: [90, 90, 100],
    }
}

/// Small station concourse: tiled floor, litter, a puddle, two bins, two
/// markers and two walking people.
pub fn demo_scene() -> SceneSpec {
    let litter = |x: f64, z: f64, class: usize| SceneItem::LitterBlob {
        position: [x, z],
        size: 0.2,
        color: LITTER_COLORS[class],
        class: class as u32,
        velocity: [0.0, 0.0],
    };
    SceneSpec {
        floor: FloorSpec {
            size: [12.0, 16.0],
            color: [186, 150, 100],
            checker: Some(Checker {
                cell: 1.0,
                color: [170, 132, 86],
            }),
            noise: 2,
        },
        camera: SceneCamera {
            position: [6.0, 4.0, 0.0],
            yaw: 0.0,
            pitch: -0.45,
            hfov: 1.2,
            width: 640,
            height: 480,
        },
        items: vec![
            SceneItem::Puddle {
                position: [4.0, 6.0],
                radii: [0.8, 0.5],
                rotation: 0.4,
                color: [200, 202, 208],
            },
            litter(7.5, 5.0, 0),
            litter(5.0, 8.0, 1),
            litter(8.0, 9.5, 2),
            SceneItem::MarkerCube {
                position: [5.0, 4.0],
                size: 0.9,
                id: 3,
                yaw: 0.0,
            },
            SceneItem::MarkerCube {
                position: [7.5, 7.0],
                size: 1.0,
                id: 9,
                yaw: 0.3,
            },
            SceneItem::Bin {
                position: [2.5, 5.5],
                radius: 0.45,
                height: 0.9,
                full: false,
                arc_occlusion: 0.0,
            },
            SceneItem::Bin {
                position: [9.5, 6.0],
                radius: 0.45,
                height: 0.9,
                full: true,
                arc_occlusion: 0.0,
            },
            SceneItem::PersonSilhouette {
                position: [4.0, 11.0],
                height: 1.75,
                width: 0.5,
                color: PERSON_COLOR,
                velocity: [0.1, -0.05],
            },
            SceneItem::PersonSilhouette {
                position: [9.0, 8.0],
                height: 1.7,
                width: 0.45,
                color: PERSON_COLOR,
                velocity: [-0.08, 0.1],
            },
        ],
        background: [70, 90, 140],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn litter_frame_places_requested_blobs() {
        let (img, boxes) = litter_frame(400, 300, 12, (8, 16), 4);
        assert_eq!(boxes.len(), 12);
        for b in &boxes {
            let px = img.pixel(b.x as usize, b.y as usize);
            assert_eq!(px, &LITTER_COLORS[b.class_id as usize]);
        }
    }

    #[test]
    fn presets_are_valid() {
        demo_scene().validate().unwrap();
        for s in 0..10 {
            puddle_scene(s).validate().unwrap();
        }
    }
}
