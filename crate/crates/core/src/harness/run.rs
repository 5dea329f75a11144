//! Pipeline orchestration over a frame directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use log::{info, warn};
use thiserror::Error;

use super::config::{Pipeline, RunConfig};
use super::report::{save_report, FrameReport, MappedPerson, MappingSection, ReportLine, StainSection, REPORT_VERSION};
use crate::bins::{classify_all, BinRoi, OccupancyParams};
use crate::coverage::{coverage, generate_probes, load_json, CameraPose, Scene};
use crate::detection::{detect_sliced, detect_whole, plan_tiles_clamped, reference_detector, DetectorHandle};
use crate::error::{Error, Result};
use crate::imaging::io::{read_image, write_image, write_mask};
use crate::imaging::{ImageBuffer, RleMask};
use crate::mapping::{
    calibrate, detect_fiducials, load_marker_world, map_to_floor, to_floor_map, FloorMap, Homography, MarkerWorld,
    TrackHistory,
};
use crate::stains::StainTracker;
use crate::synth::scene::GroundTruthManifest;

pub const REPORT_FILE: &str = "report.jsonl";
pub const HEATMAP_FILE: &str = "heatmap.pgm";

#[derive(Debug, Error)]
pub enum RunError {
    /// Bad or missing configuration or inputs, found before any frame ran.
    #[error("configuration error: {0}")]
    Config(Error),
    #[error("pipeline error: {0}")]
    Pipeline(Error),
}

pub struct RunOutcome {
    pub report: Vec<ReportLine>,
    pub frames: usize,
    pub errors: Vec<String>,
    pub partial: bool,
    pub tracks: Option<TrackHistory>,
    pub floor_map: Option<FloorMap>,
}

impl RunOutcome {
    pub fn succeeded(&self) -> bool {
        self.errors.is_empty()
    }
}

/// Image files of `dir` sorted by name.
pub fn list_frames(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut frames = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase());
        if matches!(ext.as_deref(), Some("png" | "ppm" | "pgm")) {
            frames.push(path);
        }
    }
    frames.sort();
    Ok(frames)
}

fn input_manifest(input: &Path) -> Result<GroundTruthManifest> {
    load_json(&input.join("manifest.json"), "manifest")
}

/// Everything a run needs, loaded and checked up front.
struct Prepared {
    frames: Vec<PathBuf>,
    rois: BTreeMap<String, BinRoi>,
    bin_params: OccupancyParams,
    markers: MarkerWorld,
    litter: Option<DetectorHandle>,
    people: Option<DetectorHandle>,
    coverage: Option<(Scene, Vec<CameraPose>)>,
}

fn prepare(cfg: &RunConfig) -> Result<Prepared> {
    cfg.validate()?;
    let frames = match &cfg.input {
        Some(dir) if cfg.pipelines.iter().any(|p| p.uses_frames()) => list_frames(dir)?,
        _ => Vec::new(),
    };
    let mut manifest: Option<GroundTruthManifest> = None;
    let mut manifest_for = |what: &str| -> Result<GroundTruthManifest> {
        if manifest.is_none() {
            let input = cfg.input.as_ref().expect("validated");
            manifest = Some(input_manifest(input).map_err(|e| Error::Malformed {
                what: format!("{what} source"),
                reason: format!("none configured and no usable manifest.json in the input: {e}"),
            })?);
        }
        Ok(manifest.clone().expect("just set"))
    };

    let mut rois = BTreeMap::new();
    if cfg.enabled(Pipeline::Bins) {
        rois = match &cfg.bins.rois {
            Some(p) => crate::bins::load_rois(p)?,
            None => manifest_for("bin roi")?
                .rois
                .into_iter()
                .map(|(k, r)| (k, BinRoi::new(r)))
                .collect(),
        };
    }
    let mut markers = MarkerWorld::new();
    if cfg.enabled(Pipeline::Mapping) {
        markers = match &cfg.mapping.markers {
            Some(p) => load_marker_world(p)?,
            None => manifest_for("marker world")?.markers,
        };
    }
    let litter = match cfg.enabled(Pipeline::Litter) {
        true => Some(reference_detector(cfg.litter.detector.clone())?),
        false => None,
    };
    let people = match cfg.enabled(Pipeline::Mapping) {
        true => Some(reference_detector(cfg.mapping.person_detector.clone())?),
        false => None,
    };
    let coverage = match cfg.enabled(Pipeline::Coverage) {
        true => {
            let scene = Scene::load(cfg.coverage.scene.as_ref().expect("validated"))?;
            let cameras: Vec<CameraPose> = load_json(cfg.coverage.cameras.as_ref().expect("validated"), "cameras")?;
            Some((scene, cameras))
        }
        false => None,
    };
    let mut bin_params = cfg.bins.params.clone();
    bin_params.hough.seed = bin_params.hough.seed.wrapping_add(cfg.seed);
    Ok(Prepared {
        frames,
        rois,
        bin_params,
        markers,
        litter,
        people,
        coverage,
    })
}

/// Per-run mutable state of the order-dependent pipelines.
struct Streams {
    stains: Option<StainTracker>,
    homography: Option<Homography>,
    history: TrackHistory,
}

/// Runs every enabled pipeline. With `out_dir`, the report (and optional
/// mask dumps and visit raster) are written there.
pub fn run(cfg: &RunConfig, out_dir: Option<&Path>) -> std::result::Result<RunOutcome, RunError> {
    let prep = prepare(cfg).map_err(RunError::Config)?;
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)
            .map_err(|e| RunError::Config(Error::io(dir, e)))?;
    }
    let mask_dir = match (out_dir, cfg.enabled(Pipeline::Stains) && cfg.stains.dump_masks) {
        (Some(dir), true) => {
            let d = dir.join("masks");
            std::fs::create_dir_all(&d).map_err(|e| RunError::Config(Error::io(&d, e)))?;
            Some(d)
        }
        _ => None,
    };

    let mut lines = vec![ReportLine::Header {
        format_version: REPORT_VERSION,
        pipelines: cfg.pipelines.iter().copied().collect(),
        seed: cfg.seed,
    }];
    let mut errors = Vec::new();

    if let Some((scene, cameras)) = &prep.coverage {
        match generate_probes(scene, cfg.coverage.spacing, cfg.coverage.probe_height)
            .and_then(|grid| Ok((grid.len(), coverage(cameras, &grid, scene)?)))
        {
            Ok((probes, report)) => lines.push(ReportLine::Coverage { probes, report }),
            Err(e) => errors.push(format!("coverage: {e}")),
        }
    }

    let mut streams = Streams {
        stains: match cfg.enabled(Pipeline::Stains) {
            true => Some(StainTracker::new(cfg.stains.params.clone()).map_err(RunError::Config)?),
            false => None,
        },
        homography: None,
        history: TrackHistory::default(),
    };
    let mut partial = false;
    let mut processed = 0;
    for (index, path) in prep.frames.iter().enumerate() {
        let file = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        let image = match read_image(path) {
            Ok(img) => img,
            Err(e) => {
                errors.push(format!("frame {index} ({file}): {e}"));
                partial = true;
                break;
            }
        };
        info!("frame {index}: {file}");
        let frame = process_frame(cfg, &prep, &mut streams, index, file, &image, &mut errors, &mut lines);
        if let (Some(dir), Some(t)) = (&mask_dir, &streams.stains) {
            if let Some(state) = t.state() {
                let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                if let Err(e) = write_mask(&state.active_mask(), dir.join(format!("{stem}.pgm"))) {
                    errors.push(format!("mask dump: {e}"));
                }
            }
        }
        lines.push(ReportLine::Frame(frame));
        processed += 1;
    }

    let mut floor_map = None;
    let tracks = cfg.enabled(Pipeline::Mapping).then(|| streams.history.clone());
    if let Some(history) = &tracks {
        lines.push(ReportLine::Tracks {
            tracks: history.tracks.clone(),
        });
        if let Some(bounds) = cfg.mapping.bounds {
            match to_floor_map(history, bounds, cfg.mapping.cell) {
                Ok(m) => floor_map = Some(m),
                Err(e) => errors.push(format!("heatmap: {e}")),
            }
        }
    }
    lines.push(ReportLine::Summary {
        frames: processed,
        errors: errors.clone(),
        partial,
    });

    if let Some(dir) = out_dir {
        save_report(&lines, dir.join(REPORT_FILE)).map_err(RunError::Pipeline)?;
        if let Some(m) = &floor_map {
            write_image(&m.to_image(), dir.join(HEATMAP_FILE)).map_err(RunError::Pipeline)?;
        }
    }
    Ok(RunOutcome {
        report: lines,
        frames: processed,
        errors,
        partial,
        tracks,
        floor_map,
    })
}

#[allow(clippy::too_many_arguments)]
fn process_frame(
    cfg: &RunConfig,
    prep: &Prepared,
    streams: &mut Streams,
    index: usize,
    file: String,
    image: &ImageBuffer,
    errors: &mut Vec<String>,
    lines: &mut Vec<ReportLine>,
) -> FrameReport {
    let mut record = |section: &str, e: Error| errors.push(format!("frame {index} {section}: {e}"));
    let mut out = FrameReport {
        index,
        file,
        bins: None,
        stains: None,
        litter: None,
        mapping: None,
    };

    if cfg.enabled(Pipeline::Bins) {
        match classify_all(image, &prep.rois, &prep.bin_params) {
            Ok(r) => out.bins = Some(r),
            Err(e) => record("bins", e),
        }
    }

    if let Some(tracker) = streams.stains.as_mut() {
        match tracker.push(image) {
            Ok((_, blobs)) => {
                let active = tracker.state().expect("pushed").active_mask();
                out.stains = Some(StainSection {
                    mask: RleMask::encode(&active),
                    blobs,
                });
            }
            Err(e) => record("stains", e),
        }
    }

    if let Some(det) = &prep.litter {
        let l = &cfg.litter;
        let boxes = if l.sliced {
            plan_tiles_clamped(image.width(), image.height(), l.tile_size, l.overlap)
                .and_then(|plan| detect_sliced(image, det.as_ref(), &plan, l.merge_iou))
        } else {
            detect_whole(image, det.as_ref())
        };
        match boxes {
            Ok(b) => out.litter = Some(b),
            Err(e) => record("litter", e),
        }
    }

    if let Some(det) = &prep.people {
        let m = &cfg.mapping;
        if streams.homography.is_none() {
            let calibrated = detect_fiducials(image, m.dictionary_size, &m.fiducial).and_then(|obs| {
                let known: Vec<usize> = obs
                    .iter()
                    .map(|o| o.marker_id)
                    .filter(|id| prep.markers.contains_key(id))
                    .collect();
                Ok((known, calibrate(&obs, &prep.markers)?))
            });
            match calibrated {
                Ok((markers, calibration)) => {
                    streams.homography = Some(calibration.homography);
                    lines.push(ReportLine::Calibration {
                        frame: index,
                        markers,
                        calibration,
                    });
                }
                Err(e) => info!("frame {index}: not calibrated yet ({e})"),
            }
        }
        let mut section = MappingSection {
            calibrated: streams.homography.is_some(),
            objects: Vec::new(),
        };
        if let Some(h) = &streams.homography {
            match detect_whole(image, det.as_ref()) {
                Ok(boxes) => {
                    let mapped: Vec<_> = boxes
                        .iter()
                        .enumerate()
                        .filter_map(|(i, b)| match map_to_floor(h, b, i, index as u64) {
                            Ok(o) => Some(o),
                            Err(e) => {
                                warn!("frame {index}: detection {i} not mapped: {e}");
                                None
                            }
                        })
                        .collect();
                    match streams.history.update(&mapped, m.max_assoc_dist) {
                        Ok(ids) => {
                            section.objects = mapped
                                .iter()
                                .zip(ids)
                                .map(|(o, track_id)| MappedPerson {
                                    track_id,
                                    floor_xy: o.floor_xy,
                                    bbox: o.source,
                                })
                                .collect()
                        }
                        Err(e) => record("mapping", e),
                    }
                }
                Err(e) => record("mapping", e),
            }
        }
        out.mapping = Some(section);
    }
    out
}
