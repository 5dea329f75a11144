//! Python bindings: images, sliced detection, bin occupancy, stain tracking,
//! floor calibration, coverage and the run harness.
//!
//! Nested reports (coverage, placement, run metrics) are returned as JSON
//! strings; decode them with `json.loads`.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use sentinel_core::bins::{self, BinRoi, OccupancyParams};
use sentinel_core::coverage::{self, CameraPose, Scene};
use sentinel_core::detection::{self, DetectorHandle};
use sentinel_core::harness::{self, RunConfig, RunError};
use sentinel_core::imaging::{self, ImageBuffer, Rect};
use sentinel_core::mapping::{self, Point2};
use sentinel_core::stains::{self, StainParams};
use sentinel_core::synth::{presets, scene};

fn err(e: sentinel_core::Error) -> PyErr {
    match e {
        sentinel_core::Error::Io { .. } => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn json_err(e: serde_json::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// 8-bit image, row-major, interleaved channels.
#[pyclass(name = "Image", module = "sentinel")]
struct PyImage(ImageBuffer);

#[pymethods]
impl PyImage {
    #[new]
    fn new(width: usize, height: usize, channels: usize, data: Vec<u8>) -> PyResult<Self> {
        ImageBuffer::from_raw(width, height, channels, data).map(Self).map_err(err)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        imaging::io::read_image(path).map(Self).map_err(err)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        imaging::io::write_image(&self.0, path).map_err(err)
    }

    #[getter]
    fn width(&self) -> usize {
        self.0.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.0.height()
    }

    #[getter]
    fn channels(&self) -> usize {
        self.0.channels()
    }

    fn to_bytes(&self) -> Vec<u8> {
        self.0.data().to_vec()
    }

    fn __repr__(&self) -> String {
        format!("Image({}x{}x{})", self.0.width(), self.0.height(), self.0.channels())
    }
}

#[pyclass(name = "DetectionBox", module = "sentinel", get_all)]
struct PyBox {
    x: f64,
    y: f64,
    w: f64,
    h: f64,
    class_id: u32,
    confidence: f64,
}

impl From<detection::DetectionBox> for PyBox {
    fn from(b: detection::DetectionBox) -> Self {
        Self {
            x: b.x,
            y: b.y,
            w: b.w,
            h: b.h,
            class_id: b.class_id,
            confidence: b.confidence,
        }
    }
}

#[pymethods]
impl PyBox {
    fn __repr__(&self) -> String {
        format!(
            "DetectionBox(x={}, y={}, w={}, h={}, class_id={}, confidence={:.3})",
            self.x, self.y, self.w, self.h, self.class_id, self.confidence
        )
    }
}

/// Overlapping square tiles as `(x, y, w, h)` tuples.
#[pyfunction]
#[pyo3(signature = (width, height, tile_size=640, overlap=128))]
fn plan_tiles(width: usize, height: usize, tile_size: usize, overlap: usize) -> PyResult<Vec<(usize, usize, usize, usize)>> {
    let plan = detection::plan_tiles(width, height, tile_size, overlap).map_err(err)?;
    Ok(plan.tiles.iter().map(|r| (r.x, r.y, r.w, r.h)).collect())
}

/// Colour-blob reference detector. `classes` is a detector manifest as JSON;
/// the built-in litter classes are used when it is `None`.
#[pyclass(name = "Detector", module = "sentinel")]
struct PyDetector(DetectorHandle);

#[pymethods]
impl PyDetector {
    #[new]
    #[pyo3(signature = (classes=None))]
    fn new(classes: Option<&str>) -> PyResult<Self> {
        let manifest = match classes {
            Some(text) => detection::BlobManifest::from_json(text).map_err(err)?,
            None => presets::litter_classes(),
        };
        detection::reference_detector(manifest).map(Self).map_err(err)
    }

    #[staticmethod]
    fn people() -> PyResult<Self> {
        detection::reference_detector(presets::person_classes()).map(Self).map_err(err)
    }

    #[pyo3(signature = (image, sliced=true, tile_size=640, overlap=128, merge_iou=0.5))]
    fn detect(&self, image: &PyImage, sliced: bool, tile_size: usize, overlap: usize, merge_iou: f64) -> PyResult<Vec<PyBox>> {
        let (w, h) = image.0.dims();
        let boxes = if sliced {
            let plan = detection::plan_tiles_clamped(w, h, tile_size, overlap).map_err(err)?;
            detection::detect_sliced(&image.0, self.0.as_ref(), &plan, merge_iou)
        } else {
            detection::detect_whole(&image.0, self.0.as_ref())
        }
        .map_err(err)?;
        Ok(boxes.into_iter().map(PyBox::from).collect())
    }
}

/// Bin state for one ROI: `(state, interior_std, rim_fraction)` with state
/// one of `"full"`, `"empty"`, `"unknown"`.
#[pyfunction]
#[pyo3(signature = (image, roi, params=None))]
fn classify_bin(image: &PyImage, roi: (usize, usize, usize, usize), params: Option<&str>) -> PyResult<(String, f64, f64)> {
    let params: OccupancyParams = match params {
        Some(text) => serde_json::from_str(text).map_err(json_err)?,
        None => OccupancyParams::default(),
    };
    let v = bins::classify(&image.0, BinRoi::new(Rect::new(roi.0, roi.1, roi.2, roi.3)), &params).map_err(err)?;
    let state = serde_json::to_value(v.state).map_err(json_err)?;
    Ok((state.as_str().unwrap_or_default().to_string(), v.interior_std, v.rim_fraction))
}

#[pyclass(name = "StainBlob", module = "sentinel", get_all)]
struct PyStainBlob {
    centroid: (f64, f64),
    area: usize,
    bbox: (usize, usize, usize, usize),
    age: u64,
}

#[pymethods]
impl PyStainBlob {
    fn __repr__(&self) -> String {
        format!("StainBlob(area={}, age={}, bbox={:?})", self.area, self.age, self.bbox)
    }
}

/// Per-pixel persistent stain tracking over an ordered frame stream.
#[pyclass(name = "StainTracker", module = "sentinel")]
struct PyStainTracker(stains::StainTracker);

#[pymethods]
impl PyStainTracker {
    #[new]
    #[pyo3(signature = (params=None))]
    fn new(params: Option<&str>) -> PyResult<Self> {
        let params: StainParams = match params {
            Some(text) => serde_json::from_str(text).map_err(json_err)?,
            None => StainParams::default(),
        };
        stains::StainTracker::new(params).map(Self).map_err(err)
    }

    fn push(&mut self, image: &PyImage) -> PyResult<Vec<PyStainBlob>> {
        let (_, blobs) = self.0.push(&image.0).map_err(err)?;
        Ok(blobs
            .into_iter()
            .map(|b| PyStainBlob {
                centroid: b.centroid,
                area: b.area,
                bbox: (b.bbox.x, b.bbox.y, b.bbox.w, b.bbox.h),
                age: b.age,
            })
            .collect())
    }

    /// Active mask as a gray image (255 = stain); `None` before the first frame.
    fn active_mask(&self) -> Option<PyImage> {
        self.0.state().map(|s| PyImage(s.active_mask().to_gray()))
    }
}

/// Image-to-floor homography.
#[pyclass(name = "Homography", module = "sentinel")]
struct PyHomography(mapping::Homography);

#[pymethods]
impl PyHomography {
    #[staticmethod]
    fn estimate(image: Vec<Point2>, floor: Vec<Point2>) -> PyResult<Self> {
        mapping::estimate_homography(&image, &floor).map(Self).map_err(err)
    }

    #[getter]
    fn matrix(&self) -> [[f64; 3]; 3] {
        self.0.h
    }

    fn apply(&self, point: Point2) -> PyResult<Point2> {
        self.0.apply(point).map_err(err)
    }

    /// Floor position (metres) of the bottom-center of a detection.
    fn map_box(&self, det: &PyBox) -> PyResult<Point2> {
        let b = detection::DetectionBox::new(det.x, det.y, det.w, det.h, det.class_id, det.confidence);
        mapping::map_to_floor(&self.0, &b, 0, 0).map(|m| m.floor_xy).map_err(err)
    }
}

/// Homography from point pairs plus its reprojection RMS in pixels.
#[pyfunction]
fn calibrate_points(image: Vec<Point2>, floor: Vec<Point2>) -> PyResult<(PyHomography, f64)> {
    let c = mapping::calibrate_points(&image, &floor).map_err(err)?;
    Ok((PyHomography(c.homography), c.reprojection_rms_px))
}

/// Whole centimetres between two floor points.
#[pyfunction]
fn floor_distance_cm(a: Point2, b: Point2) -> i64 {
    mapping::floor_distance_cm(a, b)
}

/// Coverage report as JSON. `scene` and `cameras` are JSON text.
#[pyfunction]
#[pyo3(signature = (scene, cameras, spacing=1.0, probe_height=0.1))]
fn coverage_report(scene: &str, cameras: &str, spacing: f64, probe_height: f64) -> PyResult<String> {
    let scene: Scene = serde_json::from_str(scene).map_err(json_err)?;
    let cameras: Vec<CameraPose> = serde_json::from_str(cameras).map_err(json_err)?;
    let grid = coverage::generate_probes(&scene, spacing, probe_height).map_err(err)?;
    let report = coverage::coverage(&cameras, &grid, &scene).map_err(err)?;
    serde_json::to_string(&report).map_err(json_err)
}

/// Greedy placement over candidate poses, as JSON.
#[pyfunction]
#[pyo3(signature = (scene, candidates, target=0.95, spacing=1.0, probe_height=0.1))]
fn suggest_placement(scene: &str, candidates: &str, target: f64, spacing: f64, probe_height: f64) -> PyResult<String> {
    let scene: Scene = serde_json::from_str(scene).map_err(json_err)?;
    let candidates: Vec<CameraPose> = serde_json::from_str(candidates).map_err(json_err)?;
    let grid = coverage::generate_probes(&scene, spacing, probe_height).map_err(err)?;
    let placement = coverage::suggest_placement(&scene, &grid, &candidates, target).map_err(err)?;
    serde_json::to_string(&placement).map_err(json_err)
}

/// Render a preset scene (`"demo"` or `"puddles"`) to `out_dir`.
#[pyfunction]
#[pyo3(signature = (out_dir, frames=10, seed=0, preset="demo"))]
fn synthesize(out_dir: PathBuf, frames: usize, seed: u64, preset: &str) -> PyResult<usize> {
    let spec = match preset {
        "demo" => presets::demo_scene(),
        "puddles" => presets::puddle_scene(seed),
        other => return Err(PyValueError::new_err(format!("unknown preset {other}"))),
    };
    let manifest = scene::synthesize_to_dir(&spec, frames, seed, &out_dir).map_err(err)?;
    Ok(manifest.frames.len())
}

/// Run the pipelines of a config file; returns the path of the report.
#[pyfunction]
#[pyo3(signature = (config, out_dir))]
fn run(config: PathBuf, out_dir: PathBuf) -> PyResult<PathBuf> {
    let cfg = RunConfig::load(&config).map_err(err)?;
    let outcome = harness::run(&cfg, Some(&out_dir)).map_err(|e| match e {
        RunError::Config(e) | RunError::Pipeline(e) => err(e),
    })?;
    if !outcome.succeeded() {
        return Err(PyValueError::new_err(outcome.errors.join("; ")));
    }
    Ok(out_dir.join(harness::REPORT_FILE))
}

/// Score a report against a manifest; metrics as JSON.
#[pyfunction]
fn evaluate(report: PathBuf, manifest: PathBuf) -> PyResult<String> {
    let lines = harness::read_report(&report).map_err(err)?;
    let text = std::fs::read_to_string(&manifest).map_err(|e| PyIOError::new_err(e.to_string()))?;
    let manifest: scene::GroundTruthManifest = serde_json::from_str(&text).map_err(json_err)?;
    let metrics = harness::evaluate(&lines, &manifest).map_err(err)?;
    serde_json::to_string(&metrics).map_err(json_err)
}

#[pymodule]
fn sentinel(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyImage>()?;
    m.add_class::<PyBox>()?;
    m.add_class::<PyDetector>()?;
    m.add_class::<PyStainBlob>()?;
    m.add_class::<PyStainTracker>()?;
    m.add_class::<PyHomography>()?;
    m.add_function(wrap_pyfunction!(plan_tiles, m)?)?;
    m.add_function(wrap_pyfunction!(classify_bin, m)?)?;
    m.add_function(wrap_pyfunction!(calibrate_points, m)?)?;
    m.add_function(wrap_pyfunction!(floor_distance_cm, m)?)?;
    m.add_function(wrap_pyfunction!(coverage_report, m)?)?;
    m.add_function(wrap_pyfunction!(suggest_placement, m)?)?;
    m.add_function(wrap_pyfunction!(synthesize, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    Ok(())
}
