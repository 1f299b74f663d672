//! Carving a raw image into a hit report.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use anyhow::{Context, Result};
use regex::bytes::Regex;
use serde::Serialize;
use tomtom_artifacts::carver::{
    scan_image, scan_seek_pattern, ChunkProgress, ScanConfig, CORRECTED_SEEK_PATTERN,
    PUBLISHED_SEEK_PATTERN,
};
use tomtom_artifacts::report::{EvidenceReport, ToolMetadata};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfigView {
    pub chunk_size: usize,
    pub overlap: usize,
    pub max_poi_len: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SeekComparison {
    pub published_pattern: &'static str,
    /// Compile error of the pattern as published, if any.
    pub published_error: Option<String>,
    pub published_matches: Option<Vec<u64>>,
    pub corrected_pattern: &'static str,
    pub corrected_matches: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CarveReport {
    pub tool: ToolMetadata,
    pub image: String,
    pub bytes_read: u64,
    pub config: ConfigView,
    pub hits: Vec<tomtom_artifacts::report::Sourced<tomtom_artifacts::carver::CarveHit>>,
    pub gaps: Vec<tomtom_artifacts::report::Sourced<tomtom_artifacts::carver::ScanGap>>,
    pub seek_pattern: Option<SeekComparison>,
}

fn open(path: &Path) -> Result<BufReader<File>> {
    let f = File::open(path).with_context(|| format!("cannot open image {}", path.display()))?;
    Ok(BufReader::new(f))
}

pub fn carve_image(
    path: &Path,
    cfg: &ScanConfig,
    paper_regex: bool,
    progress: impl FnMut(&ChunkProgress),
) -> Result<CarveReport> {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    let outcome = scan_image(&mut open(path)?, cfg, progress)?;
    let bytes_read = outcome.bytes_read;
    let none: [&str; 0] = [];
    let mut report = EvidenceReport::new(tomtom_artifacts::detect::classify_tree(&none), None);
    report.add_carve(&name, outcome);

    let seek_pattern = if paper_regex {
        #[allow(clippy::invalid_regex)]
        let published = Regex::new(PUBLISHED_SEEK_PATTERN);
        let published_matches = match &published {
            Ok(re) => {
                let bytes = std::fs::read(path)?;
                Some(re.find_iter(&bytes).map(|m| m.start() as u64).collect())
            }
            Err(_) => None,
        };
        Some(SeekComparison {
            published_pattern: PUBLISHED_SEEK_PATTERN,
            published_error: published.err().map(|e| e.to_string()),
            published_matches,
            corrected_pattern: CORRECTED_SEEK_PATTERN,
            corrected_matches: scan_seek_pattern(&mut open(path)?, cfg)?,
        })
    } else {
        None
    };

    Ok(CarveReport {
        tool: report.tool,
        image: name,
        bytes_read,
        config: ConfigView {
            chunk_size: cfg.chunk_size,
            overlap: cfg.overlap,
            max_poi_len: cfg.max_poi_len,
        },
        hits: report.carve_hits,
        gaps: report.carve_gaps,
        seek_pattern,
    })
}

pub fn emit_carve_json(report: &CarveReport) -> String {
    let mut out = serde_json::to_string_pretty(report).expect("report serializes");
    out.push('\n');
    out
}
