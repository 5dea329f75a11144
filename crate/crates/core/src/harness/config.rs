//! Run configuration.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bins::OccupancyParams;
use crate::detection::BlobManifest;
use crate::error::{Error, Result};
use crate::mapping::{FiducialParams, FloorBounds};
use crate::stains::StainParams;
use crate::synth::presets::{litter_classes, person_classes};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pipeline {
    Bins,
    Stains,
    Litter,
    Mapping,
    Coverage,
}

impl Pipeline {
    /// Pipelines that consume the frame sequence.
    pub fn uses_frames(self) -> bool {
        !matches!(self, Pipeline::Coverage)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BinsConfig {
    /// ROI file; falls back to the rois of `manifest.json` in the input dir.
    pub rois: Option<PathBuf>,
    pub params: OccupancyParams,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StainsConfig {
    pub params: StainParams,
    /// Write the active mask of every frame as PGM under `<out>/masks`.
    pub dump_masks: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LitterConfig {
    pub detector: BlobManifest,
    pub tile_size: usize,
    pub overlap: usize,
    pub merge_iou: f64,
    pub sliced: bool,
}

impl Default for LitterConfig {
    fn default() -> Self {
        Self {
            detector: litter_classes(),
            tile_size: 640,
            overlap: 128,
            merge_iou: 0.5,
            sliced: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MappingConfig {
    /// Marker-world file; falls back to the markers of `manifest.json`.
    pub markers: Option<PathBuf>,
    pub person_detector: BlobManifest,
    /// Association gate in metres.
    pub max_assoc_dist: f64,
    pub dictionary_size: usize,
    pub fiducial: FiducialParams,
    /// Extent of the visit raster; none skips it.
    pub bounds: Option<FloorBounds>,
    pub cell: f64,
}

impl Default for MappingConfig {
    fn default() -> Self {
        Self {
            markers: None,
            person_detector: person_classes(),
            max_assoc_dist: 1.0,
            dictionary_size: 16,
            fiducial: FiducialParams::default(),
            bounds: None,
            cell: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoverageConfig {
    pub scene: Option<PathBuf>,
    pub cameras: Option<PathBuf>,
    pub spacing: f64,
    pub probe_height: f64,
}

impl Default for CoverageConfig {
    fn default() -> Self {
        Self {
            scene: None,
            cameras: None,
            spacing: 1.0,
            probe_height: 0.1,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub pipelines: BTreeSet<Pipeline>,
    /// Directory of frames, processed in file-name order.
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    /// Mixed into every seeded component.
    pub seed: u64,
    pub bins: BinsConfig,
    pub stains: StainsConfig,
    pub litter: LitterConfig,
    pub mapping: MappingConfig,
    pub coverage: CoverageConfig,
}

impl RunConfig {
    pub fn from_json(text: &str, origin: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Malformed {
            what: format!("config {origin}"),
            reason: e.to_string(),
        })
    }

    /// Reads a JSON config; relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_json(&text, &path.display().to_string())?;
        if let Some(dir) = path.parent() {
            cfg.resolve_paths(dir);
        }
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(q) = p {
                if q.is_relative() {
                    *q = base.join(&*q);
                }
            }
        };
        fix(&mut self.input);
        fix(&mut self.output);
        fix(&mut self.bins.rois);
        fix(&mut self.mapping.markers);
        fix(&mut self.coverage.scene);
        fix(&mut self.coverage.cameras);
    }

    pub fn enabled(&self, p: Pipeline) -> bool {
        self.pipelines.contains(&p)
    }

    /// Parameter checks that need no file access.
    pub fn validate(&self) -> Result<()> {
        if self.pipelines.iter().any(|p| p.uses_frames()) && self.input.is_none() {
            return Err(Error::param("input", "frame pipelines enabled but no input directory"));
        }
        if self.enabled(Pipeline::Bins) {
            self.bins.params.validate()?;
        }
        if self.enabled(Pipeline::Stains) {
            self.stains.params.validate()?;
        }
        if self.enabled(Pipeline::Litter) {
            let l = &self.litter;
            self.litter.detector.validate()?;
            if l.sliced && (l.tile_size == 0 || l.overlap >= l.tile_size) {
                return Err(Error::param("litter.overlap", "need 0 <= overlap < tile_size"));
            }
            if !(l.merge_iou > 0.0 && l.merge_iou < 1.0) {
                return Err(Error::param("litter.merge_iou", "must be in (0, 1)"));
            }
        }
        if self.enabled(Pipeline::Mapping) {
            let m = &self.mapping;
            m.person_detector.validate()?;
            if !(m.max_assoc_dist > 0.0) {
                return Err(Error::param("mapping.max_assoc_dist", "must be positive"));
            }
            if !(m.cell > 0.0) {
                return Err(Error::param("mapping.cell", "must be positive"));
            }
        }
        if self.enabled(Pipeline::Coverage) {
            let c = &self.coverage;
            if c.scene.is_none() || c.cameras.is_none() {
                return Err(Error::param("coverage", "scene and cameras files are required"));
            }
            if !(c.spacing > 0.0) {
                return Err(Error::param("coverage.spacing", "must be positive"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_missing_blocks() {
        let cfg = RunConfig::from_json(r#"{"pipelines": ["bins", "litter"], "input": "frames"}"#, "t").unwrap();
        assert!(cfg.enabled(Pipeline::Bins) && cfg.enabled(Pipeline::Litter));
        assert_eq!(cfg.litter.tile_size, 640);
        assert_eq!(cfg.bins.params, OccupancyParams::default());
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_keys_report_their_line() {
        let err = RunConfig::from_json("{\n  \"pipelines\": [],\n  \"bogus\": 1\n}", "c.json").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        assert!(RunConfig::from_json(r#"{"pipelines": ["nope"]}"#, "c").is_err());
    }

    #[test]
    fn frame_pipelines_need_input() {
        let cfg = RunConfig::from_json(r#"{"pipelines": ["stains"]}"#, "t").unwrap();
        assert!(cfg.validate().is_err());
        let cfg = RunConfig::from_json(r#"{"pipelines": []}"#, "t").unwrap();
        cfg.validate().unwrap();
    }

    #[test]
    fn relative_paths_follow_the_config_file() {
        let mut cfg = RunConfig::from_json(r#"{"input": "frames", "output": "/abs/out"}"#, "t").unwrap();
        cfg.resolve_paths(Path::new("/cfg/dir"));
        assert_eq!(cfg.input.unwrap(), Path::new("/cfg/dir/frames"));
        assert_eq!(cfg.output.unwrap(), Path::new("/abs/out"));
    }
}
