//! `sentinel`: command-line front end for the cleanliness-monitoring toolkit.
//!
//! Exit codes: 0 success, 1 pipeline error, 2 configuration error.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use log::{info, warn};
use serde::{Deserialize, Serialize};

use sentinel_core::bins::{classify_all, load_rois, BinRecord, OccupancyParams};
use sentinel_core::coverage::{coverage, generate_probes, suggest_placement, CameraPose, Scene};
use sentinel_core::detection::{
    benchmark, detect_sliced, detect_whole, plan_tiles_clamped, reference_detector, render_table, BenchmarkParams,
    BlobManifest, DetectionBox, TableColumn, REFERENCE_RESOLUTIONS,
};
use sentinel_core::harness::{self, evaluate, list_frames, read_report, RunConfig, RunError};
use sentinel_core::imaging::io::{read_image, write_image, write_mask};
use sentinel_core::imaging::ImageBuffer;
use sentinel_core::mapping::{
    calibrate, detect_fiducials, load_marker_world, map_to_floor, to_floor_map, Calibration, FiducialParams,
    FloorBounds, Point2, Track, TrackHistory, TrackPoint,
};
use sentinel_core::stains::{StainBlob, StainParams, StainTracker};
use sentinel_core::synth::presets::{demo_scene, litter_classes, puddle_scene};
use sentinel_core::synth::scene::{synthesize_to_dir, GroundTruthManifest, SceneSpec};

#[derive(Parser)]
#[command(name = "sentinel", version, about = "Offline vision pipelines for cleanliness monitoring")]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory, or output file for single-artifact commands.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Repeat for more logging.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Demo,
    Puddles,
}

#[derive(Subcommand)]
enum Command {
    /// Render a synthetic frame sequence with its ground-truth manifest.
    Synth {
        /// Scene file; a preset is used when absent.
        #[arg(long)]
        scene: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "demo")]
        preset: Preset,
        #[arg(long, default_value_t = 10)]
        frames: usize,
    },
    /// Run the pipelines enabled in `--config`.
    Run {
        /// Overrides the configured input directory.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Score a run report against a ground-truth manifest.
    Eval {
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
    },
    /// Probe-grid coverage of a camera set.
    Coverage {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        cameras: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        spacing: f64,
        #[arg(long, default_value_t = 0.1)]
        probe_height: f64,
    },
    /// Greedy camera selection from candidate poses.
    Plan {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        candidates: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        target: f64,
        #[arg(long, default_value_t = 1.0)]
        spacing: f64,
        #[arg(long, default_value_t = 0.1)]
        probe_height: f64,
    },
    /// Image-to-floor homography from the markers visible in one frame.
    Calibrate {
        #[arg(long)]
        frame: PathBuf,
        #[arg(long)]
        markers: PathBuf,
        #[arg(long, default_value_t = 16)]
        dictionary_size: usize,
    },
    /// Full/empty state of every bin ROI per frame.
    Bins {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        rois: PathBuf,
        #[arg(long)]
        params: Option<PathBuf>,
    },
    /// Persistent stain blobs per frame.
    Stains {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        params: Option<PathBuf>,
        /// Directory for per-frame PGM masks of the active stains.
        #[arg(long)]
        masks: Option<PathBuf>,
    },
    /// Litter detection with the reference detector.
    Detect {
        #[arg(long)]
        input: PathBuf,
        /// Detector class manifest; the built-in litter colours otherwise.
        #[arg(long)]
        detector: Option<PathBuf>,
        #[arg(long, default_value_t = 640)]
        tile: usize,
        #[arg(long, default_value_t = 128)]
        overlap: usize,
        #[arg(long, default_value_t = 0.5)]
        iou: f64,
        #[arg(long)]
        no_slice: bool,
    },
    /// Latency table of whole-frame versus sliced inference.
    Benchmark {
        #[arg(long, default_value_t = 3)]
        runs: usize,
        /// Resolutions as WxH; the reference list otherwise.
        #[arg(long, value_delimiter = ',')]
        resolutions: Vec<String>,
        #[arg(long)]
        detector: Option<PathBuf>,
        #[arg(long, default_value_t = 640)]
        tile: usize,
        #[arg(long, default_value_t = 128)]
        overlap: usize,
    },
    /// Map detections to the floor and link them into tracks.
    Map {
        #[arg(long)]
        homography: PathBuf,
        /// Output of `detect`.
        #[arg(long)]
        detections: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        max_dist: f64,
    },
    /// Visit-count raster of mapped tracks as PGM.
    Heatmap {
        /// Output of `map`, or a run report.
        #[arg(long)]
        tracks: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        cell: f64,
        /// `min_x,min_y,max_x,max_y` in metres; the track extent otherwise.
        #[arg(long, value_delimiter = ',', num_args = 4)]
        bounds: Vec<f64>,
    },
}

enum Failure {
    Config(anyhow::Error),
    Pipeline(anyhow::Error),
}

type Outcome<T = ()> = Result<T, Failure>;

trait OrConfig<T> {
    fn config(self) -> Outcome<T>;
    fn pipeline(self) -> Outcome<T>;
}

impl<T, E: Into<anyhow::Error>> OrConfig<T> for Result<T, E> {
    fn config(self) -> Outcome<T> {
        self.map_err(|e| Failure::Config(e.into()))
    }
    fn pipeline(self) -> Outcome<T> {
        self.map_err(|e| Failure::Pipeline(e.into()))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Pipeline(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Config(e)) => {
            eprintln!("configuration error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: &Cli) -> Outcome {
    let config = cli
        .config
        .as_ref()
        .map(|p| RunConfig::load(p).with_context(|| format!("loading {}", p.display())))
        .transpose()
        .config()?;
    let seed = cli.seed.or(config.as_ref().map(|c| c.seed)).unwrap_or(0);
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Synth { scene, preset, frames } => synth(scene.as_deref(), *preset, *frames, seed, out),
        Command::Run { input } => run(config, input.clone(), cli.seed, out),
        Command::Eval { report, manifest } => eval(report, manifest, out),
        Command::Coverage {
            scene,
            cameras,
            spacing,
            probe_height,
        } => coverage_cmd(scene, cameras, *spacing, *probe_height, out),
        Command::Plan {
            scene,
            candidates,
            target,
            spacing,
            probe_height,
        } => plan(scene, candidates, *target, *spacing, *probe_height, out),
        Command::Calibrate {
            frame,
            markers,
            dictionary_size,
        } => calibrate_cmd(frame, markers, *dictionary_size, config.as_ref(), out),
        Command::Bins { input, rois, params } => bins(input, rois, params.as_deref(), config.as_ref(), seed, out),
        Command::Stains { input, params, masks } => {
            stains(input, params.as_deref(), masks.as_deref(), config.as_ref(), out)
        }
        Command::Detect {
            input,
            detector,
            tile,
            overlap,
            iou,
            no_slice,
        } => detect(input, detector.as_deref(), *tile, *overlap, *iou, !*no_slice, out),
        Command::Benchmark {
            runs,
            resolutions,
            detector,
            tile,
            overlap,
        } => bench(*runs, resolutions, detector.as_deref(), *tile, *overlap, seed, out),
        Command::Map {
            homography,
            detections,
            max_dist,
        } => map(homography, detections, *max_dist, out),
        Command::Heatmap { tracks, cell, bounds } => heatmap(tracks, *cell, bounds, out),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Writer for `path`, or stdout.
fn sink(path: Option<&Path>) -> Outcome<Box<dyn Write>> {
    Ok(match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)
                    .with_context(|| format!("creating {}", dir.display()))
                    .config()?;
            }
            let f = File::create(p).with_context(|| format!("creating {}", p.display())).config()?;
            Box::new(BufWriter::new(f))
        }
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

fn emit(w: &mut dyn Write, value: &impl Serialize, pretty: bool) -> Outcome {
    let text = if pretty {
        serde_json::to_string_pretty(value)
    } else {
        serde_json::to_string(value)
    }
    .pipeline()?;
    writeln!(w, "{text}").pipeline()
}

fn frames_in(input: &Path) -> Outcome<Vec<PathBuf>> {
    let frames = list_frames(input).config()?;
    if frames.is_empty() {
        return Err(Failure::Config(anyhow!("no frames (png/ppm/pgm) in {}", input.display())));
    }
    Ok(frames)
}

fn load_frame(path: &Path) -> Outcome<ImageBuffer> {
    read_image(path)
        .with_context(|| format!("reading frame {}", path.display()))
        .pipeline()
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn synth(scene: Option<&Path>, preset: Preset, frames: usize, seed: u64, out: Option<&Path>) -> Outcome {
    let out = out.ok_or_else(|| Failure::Config(anyhow!("synth needs --out <dir>")))?;
    let spec: SceneSpec = match scene {
        Some(p) => read_json(p).config()?,
        None => match preset {
            Preset::Demo => demo_scene(),
            Preset::Puddles => puddle_scene(seed),
        },
    };
    spec.validate().config()?;
    if frames == 0 {
        return Err(Failure::Config(anyhow!("--frames must be at least 1")));
    }
    let manifest = synthesize_to_dir(&spec, frames, seed, out).pipeline()?;
    for f in &manifest.frames {
        if !f.offscreen.is_empty() {
            warn!("frame {}: items {:?} are off-screen", f.index, f.offscreen);
        }
    }
    println!("wrote {} frames and manifest.json to {}", frames, out.display());
    Ok(())
}

fn run(config: Option<RunConfig>, input: Option<PathBuf>, seed: Option<u64>, out: Option<&Path>) -> Outcome {
    let mut cfg = config.ok_or_else(|| Failure::Config(anyhow!("run needs --config <file>")))?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if input.is_some() {
        cfg.input = input;
    }
    let out_dir = out
        .map(Path::to_path_buf)
        .or_else(|| cfg.output.clone())
        .ok_or_else(|| Failure::Config(anyhow!("no output directory: pass --out or set `output`")))?;
    let outcome = match harness::run(&cfg, Some(&out_dir)) {
        Ok(o) => o,
        Err(RunError::Config(e)) => return Err(Failure::Config(e.into())),
        Err(RunError::Pipeline(e)) => return Err(Failure::Pipeline(e.into())),
    };
    info!("report written to {}", out_dir.join(harness::REPORT_FILE).display());
    eprintln!(
        "{} frame(s), {} error(s){}",
        outcome.frames,
        outcome.errors.len(),
        if outcome.partial { ", partial" } else { "" }
    );
    if outcome.succeeded() {
        Ok(())
    } else {
        Err(Failure::Pipeline(anyhow!(outcome.errors.join("\n"))))
    }
}

fn eval(report: &Path, manifest: &Path, out: Option<&Path>) -> Outcome {
    let lines = read_report(report).config()?;
    let manifest: GroundTruthManifest = read_json(manifest).config()?;
    let metrics = evaluate(&lines, &manifest).config()?;
    emit(&mut *sink(out)?, &metrics, true)
}

fn coverage_cmd(scene: &Path, cameras: &Path, spacing: f64, probe_height: f64, out: Option<&Path>) -> Outcome {
    #[derive(Serialize)]
    struct Output {
        probes: usize,
        #[serde(flatten)]
        report: sentinel_core::coverage::CoverageReport,
    }
    let scene = Scene::load(scene).config()?;
    let cameras: Vec<CameraPose> = read_json(cameras).config()?;
    let grid = generate_probes(&scene, spacing, probe_height).config()?;
    let report = coverage(&cameras, &grid, &scene).config()?;
    eprintln!(
        "coverage {:.3}: {} of {} probes blind",
        report.coverage_ratio,
        report.blind.len(),
        grid.len()
    );
    emit(&mut *sink(out)?, &Output { probes: grid.len(), report }, true)
}

fn plan(scene: &Path, candidates: &Path, target: f64, spacing: f64, probe_height: f64, out: Option<&Path>) -> Outcome {
    let scene = Scene::load(scene).config()?;
    let candidates: Vec<CameraPose> = read_json(candidates).config()?;
    let grid = generate_probes(&scene, spacing, probe_height).config()?;
    let placement = suggest_placement(&scene, &grid, &candidates, target).config()?;
    if placement.shortfall {
        warn!("target {target} not reached; best ratio {:.3}", placement.ratio);
    }
    emit(&mut *sink(out)?, &placement, true)
}

fn calibrate_cmd(
    frame: &Path,
    markers: &Path,
    dictionary_size: usize,
    config: Option<&RunConfig>,
    out: Option<&Path>,
) -> Outcome {
    let world = load_marker_world(markers).config()?;
    let params = config.map(|c| c.mapping.fiducial.clone()).unwrap_or_default();
    let image = load_frame(frame)?;
    let obs = detect_fiducials(&image, dictionary_size, &params).pipeline()?;
    info!("markers seen: {:?}", obs.iter().map(|o| o.marker_id).collect::<Vec<_>>());
    let cal = calibrate(&obs, &world).pipeline()?;
    eprintln!(
        "{} correspondences, reprojection RMS {:.3} px",
        cal.correspondences, cal.reprojection_rms_px
    );
    emit(&mut *sink(out)?, &cal, true)
}

fn bins(
    input: &Path,
    rois: &Path,
    params: Option<&Path>,
    config: Option<&RunConfig>,
    seed: u64,
    out: Option<&Path>,
) -> Outcome {
    #[derive(Serialize)]
    struct Line<'a> {
        frame: usize,
        file: String,
        bins: &'a [BinRecord],
    }
    let rois = load_rois(rois).config()?;
    let mut params: OccupancyParams = match (params, config) {
        (Some(p), _) => read_json(p).config()?,
        (None, Some(c)) => c.bins.params.clone(),
        (None, None) => OccupancyParams::default(),
    };
    params.validate().config()?;
    params.hough.seed = params.hough.seed.wrapping_add(seed);
    let frames = frames_in(input)?;
    let mut w = sink(out)?;
    for (i, path) in frames.iter().enumerate() {
        let image = load_frame(path)?;
        let records = classify_all(&image, &rois, &params).pipeline()?;
        emit(
            &mut *w,
            &Line {
                frame: i,
                file: file_name(path),
                bins: &records,
            },
            false,
        )?;
    }
    w.flush().pipeline()
}

fn stains(
    input: &Path,
    params: Option<&Path>,
    masks: Option<&Path>,
    config: Option<&RunConfig>,
    out: Option<&Path>,
) -> Outcome {
    #[derive(Serialize)]
    struct Line<'a> {
        frame: usize,
        file: String,
        blobs: &'a [StainBlob],
    }
    let params: StainParams = match (params, config) {
        (Some(p), _) => read_json(p).config()?,
        (None, Some(c)) => c.stains.params.clone(),
        (None, None) => StainParams::default(),
    };
    let mut tracker = StainTracker::new(params).config()?;
    if let Some(dir) = masks {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("creating {}", dir.display()))
            .config()?;
    }
    let frames = frames_in(input)?;
    let mut w = sink(out)?;
    for (i, path) in frames.iter().enumerate() {
        let image = load_frame(path)?;
        let (_, blobs) = tracker.push(&image).pipeline()?;
        if let Some(dir) = masks {
            let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let active = tracker.state().expect("pushed").active_mask();
            write_mask(&active, dir.join(format!("{stem}.pgm"))).pipeline()?;
        }
        emit(
            &mut *w,
            &Line {
                frame: i,
                file: file_name(path),
                blobs: &blobs,
            },
            false,
        )?;
    }
    w.flush().pipeline()
}

#[derive(Serialize, Deserialize)]
struct DetectionLine {
    frame: usize,
    #[serde(default)]
    file: String,
    boxes: Vec<DetectionBox>,
}

fn load_detector(path: Option<&Path>) -> Outcome<sentinel_core::detection::DetectorHandle> {
    let manifest = match path {
        Some(p) => BlobManifest::load(p).config()?,
        None => litter_classes(),
    };
    reference_detector(manifest).config()
}

fn detect(
    input: &Path,
    detector: Option<&Path>,
    tile: usize,
    overlap: usize,
    iou: f64,
    sliced: bool,
    out: Option<&Path>,
) -> Outcome {
    let det = load_detector(detector)?;
    if sliced && !(iou > 0.0 && iou < 1.0) {
        return Err(Failure::Config(anyhow!("--iou must lie in (0, 1)")));
    }
    let frames = frames_in(input)?;
    let mut w = sink(out)?;
    for (i, path) in frames.iter().enumerate() {
        let image = load_frame(path)?;
        let boxes = if sliced {
            let plan = plan_tiles_clamped(image.width(), image.height(), tile, overlap).config()?;
            detect_sliced(&image, det.as_ref(), &plan, iou).pipeline()?
        } else {
            detect_whole(&image, det.as_ref()).pipeline()?
        };
        emit(
            &mut *w,
            &DetectionLine {
                frame: i,
                file: file_name(path),
                boxes,
            },
            false,
        )?;
    }
    w.flush().pipeline()
}

fn parse_resolution(s: &str) -> anyhow::Result<(usize, usize)> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| anyhow!("resolution `{s}` is not WxH"))?;
    Ok((w.trim().parse()?, h.trim().parse()?))
}

fn bench(
    runs: usize,
    resolutions: &[String],
    detector: Option<&Path>,
    tile: usize,
    overlap: usize,
    seed: u64,
    out: Option<&Path>,
) -> Outcome {
    let det = load_detector(detector)?;
    let res: Vec<(usize, usize)> = if resolutions.is_empty() {
        REFERENCE_RESOLUTIONS.to_vec()
    } else {
        resolutions
            .iter()
            .map(|s| parse_resolution(s))
            .collect::<anyhow::Result<_>>()
            .config()?
    };
    let params = BenchmarkParams {
        tile_size: tile,
        overlap,
        seed,
        ..BenchmarkParams::default()
    };
    let whole = benchmark(det.as_ref(), &res, false, runs, &params).config()?;
    let sliced = benchmark(det.as_ref(), &res, true, runs, &params).pipeline()?;
    let label = det.name().to_string();
    let table = render_table(&[
        TableColumn {
            label: label.clone(),
            records: &whole,
        },
        TableColumn {
            label,
            records: &sliced,
        },
    ]);
    let mut w = sink(out)?;
    write!(w, "{table}").pipeline()?;
    w.flush().pipeline()
}

#[derive(Serialize, Deserialize)]
struct TrackLine {
    frame: u64,
    object_id: usize,
    track_id: usize,
    floor_xy: Point2,
}

fn map(homography: &Path, detections: &Path, max_dist: f64, out: Option<&Path>) -> Outcome {
    let cal: Calibration = read_json(homography).config()?;
    if !(max_dist > 0.0) {
        return Err(Failure::Config(anyhow!("--max-dist must be positive")));
    }
    let file = File::open(detections)
        .with_context(|| format!("opening {}", detections.display()))
        .config()?;
    let mut history = TrackHistory::default();
    let mut w = sink(out)?;
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.pipeline()?;
        if line.trim().is_empty() {
            continue;
        }
        let det: DetectionLine = serde_json::from_str(&line)
            .with_context(|| format!("{} line {}", detections.display(), n + 1))
            .config()?;
        let frame = det.frame as u64;
        let mapped: Vec<_> = det
            .boxes
            .iter()
            .enumerate()
            .filter_map(|(i, b)| match map_to_floor(&cal.homography, b, i, frame) {
                Ok(m) => Some(m),
                Err(e) => {
                    warn!("frame {frame}: box {i} not mapped: {e}");
                    None
                }
            })
            .collect();
        let ids = history.update(&mapped, max_dist).pipeline()?;
        for (m, track_id) in mapped.iter().zip(ids) {
            emit(
                &mut *w,
                &TrackLine {
                    frame,
                    object_id: m.object_id,
                    track_id,
                    floor_xy: m.floor_xy,
                },
                false,
            )?;
        }
    }
    w.flush().pipeline()
}

/// Track history from `map` output or from the tracks line of a run report.
fn load_tracks(path: &Path) -> anyhow::Result<TrackHistory> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut tracks: BTreeMap<usize, Vec<TrackPoint>> = BTreeMap::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value =
            serde_json::from_str(&line).with_context(|| format!("{} line {}", path.display(), n + 1))?;
        match value.get("kind").and_then(|k| k.as_str()) {
            Some("tracks") => {
                let list: Vec<Track> = serde_json::from_value(value["tracks"].clone())?;
                for t in list {
                    tracks.entry(t.id).or_default().extend(t.points);
                }
            }
            Some(_) => {}
            None => {
                let t: TrackLine =
                    serde_json::from_value(value).with_context(|| format!("{} line {}", path.display(), n + 1))?;
                tracks.entry(t.track_id).or_default().push(TrackPoint {
                    frame_index: t.frame,
                    floor_xy: t.floor_xy,
                });
            }
        }
    }
    Ok(TrackHistory {
        tracks: tracks.into_iter().map(|(id, points)| Track { id, points }).collect(),
    })
}

fn heatmap(tracks: &Path, cell: f64, bounds: &[f64], out: Option<&Path>) -> Outcome {
    let out = out.ok_or_else(|| Failure::Config(anyhow!("heatmap needs --out <file.pgm>")))?;
    let history = load_tracks(tracks).config()?;
    let bounds = match bounds {
        [x0, y0, x1, y1] => FloorBounds {
            min: (*x0, *y0),
            max: (*x1, *y1),
        },
        _ => extent(&history, cell).config()?,
    };
    let map = to_floor_map(&history, bounds, cell).config()?;
    write_image(&map.to_image(), out).pipeline()?;
    eprintln!("{}x{} cells written to {}", map.cols, map.rows, out.display());
    Ok(())
}

/// Bounding rectangle of all track points, padded by one cell.
fn extent(history: &TrackHistory, cell: f64) -> anyhow::Result<FloorBounds> {
    let mut pts = history.tracks.iter().flat_map(|t| &t.points).map(|p| p.floor_xy);
    let first = pts.next().ok_or_else(|| anyhow!("no track points"))?;
    let (mut lo, mut hi) = (first, first);
    for p in pts {
        lo = (lo.0.min(p.0), lo.1.min(p.1));
        hi = (hi.0.max(p.0), hi.1.max(p.1));
    }
    if !(cell > 0.0) {
        bail!("--cell must be positive");
    }
    Ok(FloorBounds {
        min: (lo.0 - cell, lo.1 - cell),
        max: (hi.0 + cell, hi.1 + cell),
    })
}
