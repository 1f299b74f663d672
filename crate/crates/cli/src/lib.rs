//! Command implementations behind the `ttforensic` binary.

pub mod carve;
pub mod config;
pub mod decode;
pub mod fixture;

use std::str::FromStr;

use anyhow::{anyhow, Result};
use tomtom_artifacts::report::{emit_gpx, emit_json, emit_timeline_csv, EvidenceReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Format {
    Json,
    Gpx,
    Csv,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Gpx => "gpx",
            Format::Csv => "csv",
        }
    }

    pub fn render(self, report: &EvidenceReport) -> String {
        match self {
            Format::Json => emit_json(report),
            Format::Gpx => emit_gpx(report),
            Format::Csv => emit_timeline_csv(report),
        }
    }
}

impl FromStr for Format {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Format::Json),
            "gpx" => Ok(Format::Gpx),
            "csv" => Ok(Format::Csv),
            other => Err(anyhow!("unknown format {other:?} (json, gpx, csv)")),
        }
    }
}

/// Byte count with an optional K, M or G suffix (powers of 1024).
pub fn parse_size(text: &str) -> Result<u64> {
    let t = text.trim();
    let (digits, shift) = match t.char_indices().last() {
        Some((i, c)) if c.is_ascii_alphabetic() => {
            let shift = match c.to_ascii_uppercase() {
                'K' => 10,
                'M' => 20,
                'G' => 30,
                _ => return Err(anyhow!("unknown size suffix in {text:?}")),
            };
            (&t[..i], shift)
        }
        _ => (t, 0),
    };
    let n: u64 = digits.parse().map_err(|_| anyhow!("invalid size {text:?}"))?;
    n.checked_shl(shift)
        .filter(|v| v >> shift == n)
        .ok_or_else(|| anyhow!("size {text:?} overflows"))
}
