//! JSON Lines run reports.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::Pipeline;
use crate::bins::BinRecord;
use crate::coverage::CoverageReport;
use crate::detection::DetectionBox;
use crate::error::{Error, Result};
use crate::imaging::RleMask;
use crate::mapping::{Calibration, Point2, Track};
use crate::stains::StainBlob;

pub const REPORT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StainSection {
    /// Active (persisted) stain mask after this frame.
    pub mask: RleMask,
    pub blobs: Vec<StainBlob>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MappedPerson {
    pub track_id: usize,
    pub floor_xy: Point2,
    pub bbox: DetectionBox,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MappingSection {
    pub calibrated: bool,
    pub objects: Vec<MappedPerson>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameReport {
    pub index: usize,
    pub file: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bins: Option<Vec<BinRecord>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stains: Option<StainSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub litter: Option<Vec<DetectionBox>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mapping: Option<MappingSection>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReportLine {
    Header {
        format_version: u32,
        pipelines: Vec<Pipeline>,
        seed: u64,
    },
    Coverage {
        probes: usize,
        report: CoverageReport,
    },
    Frame(FrameReport),
    Calibration {
        /// Frame the homography was estimated on.
        frame: usize,
        markers: Vec<usize>,
        calibration: Calibration,
    },
    Tracks {
        tracks: Vec<Track>,
    },
    Summary {
        frames: usize,
        errors: Vec<String>,
        /// The run stopped before the end of the input.
        partial: bool,
    },
}

pub fn write_report(lines: &[ReportLine], out: &mut impl Write) -> Result<()> {
    for line in lines {
        serde_json::to_writer(&mut *out, line)?;
        out.write_all(b"\n").map_err(|e| Error::io("report", e))?;
    }
    Ok(())
}

pub fn save_report(lines: &[ReportLine], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    write_report(lines, &mut buf)?;
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn read_report(path: impl AsRef<Path>) -> Result<Vec<ReportLine>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (n, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Malformed {
            what: format!("report {} line {}", path.display(), n + 1),
            reason: e.to_string(),
        })?);
    }
    Ok(out)
}

/// Frame lines of a report, in order.
pub fn frames(lines: &[ReportLine]) -> impl Iterator<Item = &FrameReport> {
    lines.iter().filter_map(|l| match l {
        ReportLine::Frame(f) => Some(f),
        _ => None,
    })
}
