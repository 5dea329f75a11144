//! Run configuration, orchestration, JSON Lines reports and evaluation
//! against synthetic ground truth.

mod config;
mod evaluate;
mod report;
mod run;

pub use config::{BinsConfig, CoverageConfig, LitterConfig, MappingConfig, Pipeline, RunConfig, StainsConfig};
pub use evaluate::{evaluate, match_boxes, report_from_manifest, DetectionMetrics, Metrics, MATCH_IOU};
pub use report::{
    frames, read_report, save_report, write_report, FrameReport, MappedPerson, MappingSection, ReportLine,
    StainSection, REPORT_VERSION,
};
pub use run::{list_frames, run, RunError, RunOutcome, HEATMAP_FILE, REPORT_FILE};
