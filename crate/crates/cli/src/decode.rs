//! detect → parse → assemble → report over one or more input paths.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use sha2::{Digest, Sha256};
use tomtom_artifacts::detect::{classify_tree, expected_artifacts, FileKind, SourceClass};
use tomtom_artifacts::ov2::{parse_ov2, Ov2Error, ParseOptions, Strictness};
use tomtom_artifacts::records::{assemble_map_settings, assemble_navkit};
use tomtom_artifacts::report::{EvidenceReport, InputDigest, Sourced, SourceRef};
use tomtom_artifacts::settings_xml::{group_records, parse_store, RecordGroup, StoreFamily};
use walkdir::WalkDir;

use crate::config::Config;

#[derive(Debug, Clone, Default)]
pub struct DecodeOptions {
    pub strict: bool,
    pub reveal_credentials: bool,
    pub stamp_run_time: bool,
    pub config: Config,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Complete,
    /// Malformed entries or undecodable ov2 regions were skipped.
    Partial,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Complete => 0,
            Outcome::Partial => 2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Decoded {
    pub report: EvidenceReport,
    pub outcome: Outcome,
}

/// An input file with its report-facing relative path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeEntry {
    pub rel: String,
    pub path: PathBuf,
    pub is_dir: bool,
}

fn rel_string(path: &Path) -> String {
    path.components()
        .map(|c| c.as_os_str().to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join("/")
}

/// Lists every entry under the inputs in sorted order. With several inputs
/// the relative paths are prefixed by the input's own name.
pub fn walk_inputs(inputs: &[PathBuf]) -> Result<Vec<TreeEntry>> {
    let mut out = Vec::new();
    for input in inputs {
        let meta = std::fs::metadata(input)
            .with_context(|| format!("cannot read input {}", input.display()))?;
        let prefix = if inputs.len() > 1 {
            input
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| input.display().to_string())
        } else {
            String::new()
        };
        let join = |rel: String| {
            if prefix.is_empty() {
                rel
            } else if rel.is_empty() {
                prefix.clone()
            } else {
                format!("{prefix}/{rel}")
            }
        };
        if meta.is_file() {
            let name = input
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            let rel = if prefix.is_empty() { name } else { prefix.clone() };
            out.push(TreeEntry { rel, path: input.clone(), is_dir: false });
            continue;
        }
        for entry in WalkDir::new(input).sort_by_file_name().min_depth(1) {
            let entry = entry.with_context(|| format!("walking {}", input.display()))?;
            let rel = entry.path().strip_prefix(input).unwrap_or(entry.path());
            out.push(TreeEntry {
                rel: join(rel_string(rel)),
                path: entry.path().to_path_buf(),
                is_dir: entry.file_type().is_dir(),
            });
        }
    }
    out.sort_by(|a, b| a.rel.cmp(&b.rel));
    Ok(out)
}

pub fn classify_entries(entries: &[TreeEntry]) -> SourceClass {
    let paths: Vec<&str> = entries.iter().map(|e| e.rel.as_str()).collect();
    classify_tree(&paths)
}

fn digest(rel: &str, bytes: &[u8]) -> InputDigest {
    InputDigest {
        path: rel.to_owned(),
        bytes: bytes.len() as u64,
        sha256: hex::encode(Sha256::digest(bytes)),
    }
}

fn is_ov2(rel: &str) -> bool {
    rel.to_ascii_lowercase().ends_with(".ov2")
}

fn split_families(groups: Vec<RecordGroup>) -> [Vec<RecordGroup>; 3] {
    let mut out: [Vec<RecordGroup>; 3] = Default::default();
    for g in groups {
        let slot = match g.family {
            StoreFamily::MapSettings => 0,
            StoreFamily::NavkitSettings => 1,
            StoreFamily::Other(_) => 2,
        };
        out[slot].push(g);
    }
    out
}

pub fn decode_inputs(inputs: &[PathBuf], opts: &DecodeOptions) -> Result<Decoded> {
    let entries = walk_inputs(inputs)?;
    let source = classify_entries(&entries);
    let checklist = expected_artifacts(&source).ok();
    let stores: Vec<&str> = source
        .evidence
        .iter()
        .filter(|e| matches!(e.kind, FileKind::NavkitSettingsXml | FileKind::MapStoreXml))
        .map(|e| e.path.as_str())
        .collect();
    let strictness = if opts.strict { Strictness::Strict } else { Strictness::Tolerant };
    let header_len = source
        .model_id
        .as_deref()
        .and_then(|m| opts.config.ov2_header(m))
        .map(|h| h.len());

    let mut report = EvidenceReport::new(source.clone(), checklist);
    for entry in entries.iter().filter(|e| !e.is_dir) {
        let rel = entry.rel.as_str();
        let wanted_store = stores.contains(&rel);
        if !is_ov2(rel) && !wanted_store {
            continue;
        }
        let bytes = std::fs::read(&entry.path)
            .with_context(|| format!("cannot read {}", entry.path.display()))?;
        report.tool.inputs.push(digest(rel, &bytes));
        if is_ov2(rel) {
            let options = ParseOptions { strictness, header_len };
            match parse_ov2(&bytes, options) {
                Ok(file) => report.add_ov2(rel, &file),
                Err(Ov2Error::EmptyInput) => {}
                Err(e) => bail!("{rel}: {e}"),
            }
            continue;
        }
        let text = String::from_utf8_lossy(&bytes);
        let store = parse_store(&text, strictness).map_err(|e| anyhow::anyhow!("{rel}: {e}"))?;
        report.add_malformed(rel, &store.malformed);
        let [map, navkit, other] = split_families(group_records(&store.entries));
        if !map.is_empty() {
            report.add_map_settings(rel, assemble_map_settings(&map));
        }
        if !navkit.is_empty() {
            report.add_navkit(rel, assemble_navkit(&navkit));
        }
        for g in other {
            report.unmapped.push(Sourced {
                source: SourceRef::lines(rel, &g.source_lines),
                record: g,
            });
        }
    }

    if !opts.reveal_credentials {
        report.redact_credentials();
    }
    if opts.stamp_run_time {
        report.tool.run_time = Some(
            chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        );
    }
    let outcome = if report.has_malformed() || !report.ov2_gaps.is_empty() {
        Outcome::Partial
    } else {
        Outcome::Complete
    };
    Ok(Decoded { report, outcome })
}
